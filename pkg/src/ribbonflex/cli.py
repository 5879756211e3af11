"""Command-line client for the analysis service.

Subcommands build the same request models the HTTP endpoints accept and call
the service handlers in-process; file I/O (surface documents, OBJ frames,
report documents) happens client-side.

Exit codes: 0 flexible/ok, 1 rigid verdict, 2 degeneracy or usage error.
"""

import json
import sys

import click
from fastapi import HTTPException

from . import __version__, service
from .documents import SurfaceDocument

EXIT_OK = 0
EXIT_RIGID = 1
EXIT_DEGENERATE = 2


class Session:
    def __init__(self, tol_chi, tol_flex, seed, quiet, as_json):
        self.tol_chi = tol_chi
        self.tol_flex = tol_flex
        self.seed = seed
        self.quiet = quiet
        self.as_json = as_json

    def say(self, message):
        if not self.quiet and not self.as_json:
            click.echo(message)

    def emit(self, model):
        if self.as_json:
            click.echo(model.model_dump_json())


def _fail(message, code):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_surface(path):
    try:
        doc = SurfaceDocument.load(path)
        return service.SurfaceDocumentModel(**doc.to_payload())
    except (OSError, ValueError, json.JSONDecodeError) as err:
        _fail(f"cannot read surface document {path}: {err}", EXIT_DEGENERATE)


def _call(handler, request):
    try:
        return handler(request)
    except HTTPException as err:
        _fail(err.detail, EXIT_DEGENERATE)


@click.group()
@click.version_option(__version__)
@click.option("--tol-chi", type=float, default=None,
              help="Verdict threshold on normalized max |chi|.")
@click.option("--tol-flex", type=float, default=None,
              help="Target invariant drift for flexion trajectories.")
@click.option("--seed", type=int, default=0, help="Generator seed.")
@click.option("--quiet", is_flag=True, help="Suppress progress output.")
@click.option("--json", "as_json", is_flag=True,
              help="Print the machine-readable report to stdout.")
@click.pass_context
def main(ctx, tol_chi, tol_flex, seed, quiet, as_json):
    """Flexibility analysis of semidiscrete ribbon surfaces."""
    ctx.obj = Session(tol_chi, tol_flex, seed, quiet, as_json)


@main.command()
@click.option("--kind", required=True,
              type=click.Choice(["REV", "CONE", "RAND", "DEV", "TRANSLATE"],
                                case_sensitive=False))
@click.option("--ribbons", type=int, default=2, show_default=True)
@click.option("--n", "nodes", type=int, default=201, show_default=True,
              help="Grid nodes per curve.")
@click.option("--a", "grid_a", type=float, default=0.0, show_default=True)
@click.option("--b", "grid_b", type=float, default=1.0, show_default=True)
@click.option("--param", "params", multiple=True, metavar="KEY=VALUE",
              help="Generator-specific parameter override (repeatable).")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
def gen(sess, kind, ribbons, nodes, grid_a, grid_b, params, out):
    """Generate a surface document."""
    parsed = {}
    for item in params:
        key, sep, value = item.partition("=")
        if not sep:
            raise click.UsageError(f"--param needs KEY=VALUE, got {item!r}")
        try:
            parsed[key] = float(value)
        except ValueError as err:
            raise click.UsageError(f"--param {key}: {err}") from err
    request = service.GenerateRequest(
        kind=kind,
        ribbons=ribbons,
        grid=service.GridModel(a=grid_a, b=grid_b, n=nodes),
        seed=sess.seed,
        params=parsed,
    )
    model = _call(service.generate_surface, request)
    SurfaceDocument.from_payload(model.model_dump()).save(out)
    sess.say(f"wrote {kind.upper()} surface ({ribbons} ribbons, {nodes} nodes) "
             f"to {out}")
    sess.emit(model)


@main.command()
@click.argument("surface", type=click.Path(exists=True, dir_okay=False))
@click.option("--t1", type=float, default=None,
              help="Left endpoint for the monodromy residual.")
@click.option("--t2", type=float, default=None,
              help="Right endpoint for the monodromy residual.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the report document here.")
@click.pass_obj
def check(sess, surface, t1, t2, out):
    """Infinitesimal flexibility verdict with per-window residuals."""
    request = service.CheckRequest(surface=_load_surface(surface), t1=t1,
                                   t2=t2, tol_chi=sess.tol_chi)
    report = _call(service.run_check, request)
    for triple in report.triples:
        sess.say(f"window at curves {triple.first_curve}..{triple.first_curve + 3}: "
                 f"{triple.verdict} (normalized max |chi| = "
                 f"{triple.chi_normalized_max}, monodromy residual = "
                 f"{triple.monodromy_residual})")
    sess.say(f"verdict: {report.verdict}")
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(report.model_dump_json() + "\n")
    sess.emit(report)
    if report.verdict == "rigid":
        sys.exit(EXIT_RIGID)
    if report.verdict == "indeterminate":
        sys.exit(EXIT_DEGENERATE)


@main.command()
@click.argument("surface", type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda-max", type=float, required=True)
@click.option("--steps", type=int, default=50, show_default=True)
@click.option("--frames", "frames_dir", type=click.Path(file_okay=False),
              default=None, help="Export one OBJ mesh per frame here.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the trajectory report document here.")
@click.pass_obj
def flex(sess, surface, lambda_max, steps, frames_dir, out):
    """Integrate the finite flexion and report invariant drift."""
    request = service.FlexRequest(
        surface=_load_surface(surface),
        lambda_max=lambda_max,
        steps=steps,
        tol_chi=sess.tol_chi,
        tol_flex=sess.tol_flex,
    )
    response = _call(service.run_flex, request)
    if not response.accepted:
        sess.emit(response)
        click.echo(f"rejected: {response.rejection}", err=True)
        sys.exit(EXIT_RIGID)
    if frames_dir:
        from .meshio import export_frames

        surfaces = [frame.to_surface() for frame in response.frames]
        paths = export_frames(surfaces, frames_dir)
        sess.say(f"exported {len(paths)} frames to {frames_dir}")
    sess.say(f"integrated to lambda = {response.lambdas[-1]:g} "
             f"({len(response.lambdas) - 1} steps)")
    sess.say(f"max normalized invariant drift: {response.drift.max_normalized:.3e}")
    if response.truncated:
        sess.say(f"truncated: {response.truncation_reason}")
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(response.model_dump_json() + "\n")
    sess.emit(response)
    if response.truncated:
        sys.exit(EXIT_RIGID)


@main.command()
@click.argument("surface", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def invariants(sess, surface):
    """Dump the inner-geometry invariant fields."""
    request = service.InvariantsRequest(surface=_load_surface(surface))
    response = _call(service.run_invariants, request)
    sess.say(f"genericity margin: {response.genericity_margin:.6f}")
    for name, rows in response.families.items():
        flat = [v for row in rows for v in row]
        sess.say(f"{name}: {len(rows)} curves/ribbons, "
                 f"range [{min(flat):.6g}, {max(flat):.6g}]")
    sess.emit(response)


@main.command()
@click.argument("surface", type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda-max", type=float, default=None,
              help="Also flex the surface and fit cos(angle) affinely.")
@click.option("--steps", type=int, default=30, show_default=True)
@click.pass_obj
def developable(sess, surface, lambda_max, steps):
    """Per-ribbon developability verdicts and the ruling coefficients."""
    request = service.DevelopableRequest(surface=_load_surface(surface),
                                         lambda_max=lambda_max, steps=steps)
    response = _call(service.run_developable, request)
    for ribbon in response.ribbons:
        sess.say(f"ribbon {ribbon.ribbon}: "
                 f"{'developable' if ribbon.developable else 'not developable'} "
                 f"(max residual {ribbon.max_residual:.3e})"
                 + (f" [{ribbon.note}]" if ribbon.note else ""))
    if response.h_shortcut_max_error is not None:
        sess.say(f"transport-rate shortcut max error: "
                 f"{response.h_shortcut_max_error:.3e}")
    if response.affinity_defect is not None:
        sess.say(f"cos(angle) affinity defect: {response.affinity_defect:.3e}")
    if response.note:
        sess.say(response.note)
    sess.emit(response)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("ribbonflex.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
