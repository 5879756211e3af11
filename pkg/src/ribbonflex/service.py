"""Service layer: pydantic request/response models and the FastAPI app.

Every analysis is exposed both over HTTP and to the command-line client,
which calls the same handler functions in-process.  Handlers accept and
return models only; surfaces travel as JSON documents, so a client never
needs the package's internal types.
"""

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, developable, flexibility, flexion, generators, geometry
from .documents import FORMAT_VERSION, SurfaceDocument
from .errors import DegeneracyError, GenerationError, RibbonflexError, RigidityError


class GridModel(BaseModel):
    a: float = 0.0
    b: float = 1.0
    n: int = Field(default=201, ge=9)


class SurfaceDocumentModel(BaseModel):
    format: int = FORMAT_VERSION
    metadata: dict = Field(default_factory=dict)
    grid: GridModel
    curves: list[list[list[float]]]

    @classmethod
    def from_surface(cls, surface, metadata=None):
        doc = SurfaceDocument.from_surface(surface, metadata)
        return cls(**doc.to_payload())

    def to_surface(self):
        return SurfaceDocument.from_payload(self.model_dump()).to_surface()


class GenerateRequest(BaseModel):
    kind: str
    ribbons: int = Field(default=2, ge=1)
    grid: GridModel = Field(default_factory=GridModel)
    seed: int = 0
    params: dict[str, float] = Field(default_factory=dict)


class TripleVerdictModel(BaseModel):
    first_curve: int
    verdict: str
    chi_normalized_max: Optional[float] = None
    monodromy_residual: Optional[float] = None
    note: str = ""


class CheckRequest(BaseModel):
    surface: SurfaceDocumentModel
    t1: Optional[float] = None
    t2: Optional[float] = None
    tol_chi: Optional[float] = None


class CheckResponse(BaseModel):
    """The flexibility report document."""

    format: int = FORMAT_VERSION
    tool_version: str = __version__
    verdict: str
    ribbons: int
    tolerances: dict[str, float]
    t1: float
    t2: float
    triples: list[TripleVerdictModel]
    note: str = ""


class DriftSummaryModel(BaseModel):
    raw: dict[str, float]
    normalized: dict[str, float]
    scale: float
    max_normalized: float


class FlexRequest(BaseModel):
    surface: SurfaceDocumentModel
    lambda_max: float
    steps: int = Field(default=50, ge=0)
    tol_chi: Optional[float] = None
    tol_flex: Optional[float] = None
    include_frames: bool = True


class FlexResponse(BaseModel):
    accepted: bool
    rejection: str = ""
    offending_triple: Optional[int] = None
    lambdas: list[float] = Field(default_factory=list)
    frames: list[SurfaceDocumentModel] = Field(default_factory=list)
    drift: Optional[DriftSummaryModel] = None
    truncated: bool = False
    truncation_reason: str = ""


class InvariantsRequest(BaseModel):
    surface: SurfaceDocumentModel


class InvariantsResponse(BaseModel):
    grid: GridModel
    genericity_margin: float
    families: dict[str, list[list[float]]]


class RibbonDevelopableModel(BaseModel):
    ribbon: int
    developable: bool
    max_residual: float
    ruling_a: Optional[list[float]] = None
    ruling_b: Optional[list[float]] = None
    note: str = ""


class DevelopableRequest(BaseModel):
    surface: SurfaceDocumentModel
    lambda_max: Optional[float] = None
    steps: Optional[int] = None


class DevelopableResponse(BaseModel):
    ribbons: list[RibbonDevelopableModel]
    all_developable: bool
    h_shortcut_max_error: Optional[float] = None
    affinity_defect: Optional[float] = None
    note: str = ""


class HealthResponse(BaseModel):
    status: str
    version: str


def _surface_from_model(model):
    try:
        return model.to_surface()
    except ValueError as err:
        raise HTTPException(status_code=422, detail=str(err)) from err


def _node_for(surface, t, default):
    if t is None:
        return default
    span = surface.b - surface.a
    j = round((t - surface.a) / span * (surface.n_nodes - 1))
    if not 0 <= j < surface.n_nodes:
        raise HTTPException(
            status_code=422,
            detail=f"parameter value {t} outside the grid [{surface.a}, {surface.b}]")
    return int(j)


def generate_surface(request: GenerateRequest) -> SurfaceDocumentModel:
    grid = (request.grid.a, request.grid.b, request.grid.n)
    try:
        surface = generators.generate(request.kind, ribbons=request.ribbons,
                                      grid=grid, seed=request.seed,
                                      params=request.params)
    except (ValueError, GenerationError) as err:
        raise HTTPException(status_code=422, detail=str(err)) from err
    metadata = {
        "name": f"{request.kind.upper()}-{request.ribbons}",
        "generator": request.kind.upper(),
        "seed": request.seed,
        "tool_version": __version__,
    }
    if request.params:
        metadata["params"] = dict(sorted(request.params.items()))
    return SurfaceDocumentModel.from_surface(surface, metadata)


def run_check(request: CheckRequest) -> CheckResponse:
    surface = _surface_from_model(request.surface)
    tol = (flexibility.default_tol_chi() if request.tol_chi is None
           else request.tol_chi)
    node1 = _node_for(surface, request.t1, 0)
    node2 = _node_for(surface, request.t2, surface.n_nodes - 1)
    t_of = lambda j: surface.a + j * surface.dx
    try:
        geometry.require_margin(surface)
    except DegeneracyError as err:
        raise HTTPException(
            status_code=422,
            detail=f"degenerate surface: {err} (curve {err.curve}, node {err.node})",
        ) from err
    if surface.ribbons < 3:
        return CheckResponse(
            verdict="flexible",
            ribbons=surface.ribbons,
            tolerances={"tol_chi": tol},
            t1=t_of(node1),
            t2=t_of(node2),
            triples=[],
            note="surfaces with fewer than 3 ribbons are flexible whenever "
                 "the genericity condition holds",
        )
    triples = []
    for first in range(surface.ribbons - 2):
        window = surface.subsurface(first, first + 3)
        report = flexibility.window_report(window, first_curve=first,
                                           tol_chi=tol)
        residual = None
        if report.verdict != "indeterminate":
            residual = float(
                flexibility.monodromy_check(window, node1, node2))
        triples.append(TripleVerdictModel(
            first_curve=first,
            verdict=report.verdict,
            chi_normalized_max=(None if report.verdict == "indeterminate"
                                else report.chi_normalized_max),
            monodromy_residual=residual,
            note=report.note,
        ))
    if any(t.verdict == "indeterminate" for t in triples):
        verdict = "indeterminate"
    elif all(t.verdict == "flexible" for t in triples):
        verdict = "flexible"
    else:
        verdict = "rigid"
    return CheckResponse(
        verdict=verdict,
        ribbons=surface.ribbons,
        tolerances={"tol_chi": tol},
        t1=t_of(node1),
        t2=t_of(node2),
        triples=triples,
    )


def run_flex(request: FlexRequest) -> FlexResponse:
    surface = _surface_from_model(request.surface)
    try:
        trajectory = flexion.propagate_flexion(
            surface, request.lambda_max, request.steps,
            tol_chi=request.tol_chi, tol_flex=request.tol_flex)
    except RigidityError as err:
        return FlexResponse(accepted=False, rejection=str(err),
                            offending_triple=err.first_curve)
    except DegeneracyError as err:
        raise HTTPException(status_code=422,
                            detail=f"degenerate surface: {err}") from err
    summary = flexion.invariant_drift(trajectory)
    frames = []
    if request.include_frames:
        frames = [SurfaceDocumentModel.from_surface(s, {"lambda": lam})
                  for lam, s in zip(trajectory.lambdas.tolist(),
                                    trajectory.surfaces)]
    return FlexResponse(
        accepted=True,
        lambdas=trajectory.lambdas.tolist(),
        frames=frames,
        drift=DriftSummaryModel(
            raw=summary.raw,
            normalized=summary.normalized,
            scale=summary.scale,
            max_normalized=summary.max_normalized(),
        ),
        truncated=trajectory.truncated,
        truncation_reason=trajectory.truncation_reason,
    )


def run_invariants(request: InvariantsRequest) -> InvariantsResponse:
    surface = _surface_from_model(request.surface)
    invariants = geometry.inner_geometry(surface)
    try:
        margin = geometry.genericity_margin(surface)
    except DegeneracyError as err:
        raise HTTPException(status_code=422,
                            detail=f"degenerate surface: {err}") from err
    return InvariantsResponse(
        grid=GridModel(a=surface.a, b=surface.b, n=surface.n_nodes),
        genericity_margin=margin,
        families={name: values.tolist()
                  for name, values in invariants.families().items()},
    )


def run_developable(request: DevelopableRequest) -> DevelopableResponse:
    surface = _surface_from_model(request.surface)
    ribbons = []
    for i in range(surface.ribbons):
        try:
            verdict, residual = developable.is_developable(surface, i)
        except DegeneracyError as err:
            raise HTTPException(status_code=422,
                                detail=f"degenerate ribbon {i}: {err}") from err
        entry = RibbonDevelopableModel(ribbon=i, developable=verdict,
                                       max_residual=residual)
        if verdict:
            try:
                coeffs = developable.ruling_coefficients(surface, i)
                entry.ruling_a = coeffs.a.tolist()
                entry.ruling_b = coeffs.b.tolist()
            except RibbonflexError as err:
                entry.note = str(err)
        ribbons.append(entry)
    all_dev = all(r.developable for r in ribbons)
    h_error = None
    if all_dev and surface.ribbons >= 2:
        errors = []
        try:
            for i in range(1, surface.ribbons):
                h_general = flexibility.h_field(surface, i)
                errors.extend(
                    abs(developable.h_developable(surface, i, j) - h_general[j])
                    for j in range(surface.n_nodes))
            h_error = float(max(errors))
        except RibbonflexError:
            h_error = None
    defect = None
    note = ""
    if request.lambda_max is not None and request.steps:
        if surface.ribbons != 2:
            note = "angle-linearity trace needs a 2-ribbon surface; skipped"
        elif not all_dev:
            note = "angle-linearity trace needs developable ribbons; skipped"
        else:
            trajectory = flexion.flex_2ribbon(surface, request.lambda_max,
                                              request.steps)
            trace = developable.cos_alpha_linearity(trajectory)
            defect = trace.affinity_defect
            if trajectory.truncated:
                note = f"trajectory truncated: {trajectory.truncation_reason}"
    return DevelopableResponse(
        ribbons=ribbons,
        all_developable=all_dev,
        h_shortcut_max_error=h_error,
        affinity_defect=defect,
        note=note,
    )


def create_app():
    app = FastAPI(
        title="ribbonflex",
        version=__version__,
        description="Isometric flexions and flexibility tests for "
                    "semidiscrete ribbon surfaces",
    )

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/generate", response_model=SurfaceDocumentModel)
    def generate(request: GenerateRequest):
        return generate_surface(request)

    @app.post("/check", response_model=CheckResponse)
    def check(request: CheckRequest):
        return run_check(request)

    @app.post("/flex", response_model=FlexResponse)
    def flex(request: FlexRequest):
        return run_flex(request)

    @app.post("/invariants", response_model=InvariantsResponse)
    def invariants(request: InvariantsRequest):
        return run_invariants(request)

    @app.post("/developable", response_model=DevelopableResponse)
    def developable_endpoint(request: DevelopableRequest):
        return run_developable(request)

    return app


app = create_app()
