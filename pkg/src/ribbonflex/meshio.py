"""OBJ export of sampled surfaces and flexion trajectories.

One file per frame: vertices are all curve samples in curve-major order,
faces are the quadrilaterals of the ruled strips (1-indexed, as the format
requires).  A minimal parser is included so round-trips can be verified
without external tooling.
"""

import os

import numpy as np

from .errors import TrajectoryError


def surface_to_obj(surface):
    """OBJ text for one surface: (n+1)*N vertices, n*(N-1) quad faces."""
    lines = []
    for curve in surface.curves:
        for x, y, z in curve.samples:
            lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    n_nodes = surface.n_nodes
    for i in range(surface.ribbons):
        base = i * n_nodes
        for j in range(n_nodes - 1):
            a = base + j + 1
            b = base + j + 2
            c = base + n_nodes + j + 2
            d = base + n_nodes + j + 1
            lines.append(f"f {a} {b} {c} {d}")
    return "\n".join(lines) + "\n"


def write_obj(surface, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(surface_to_obj(surface))


def export_frames(trajectory, directory):
    """Write frame_0000.obj, frame_0001.obj, ... for a trajectory.

    Returns the list of written paths.
    """
    surfaces = getattr(trajectory, "surfaces", trajectory)
    if not surfaces:
        raise TrajectoryError("nothing to export: empty trajectory")
    os.makedirs(directory, exist_ok=True)
    paths = []
    for k, surface in enumerate(surfaces):
        path = os.path.join(directory, f"frame_{k:04d}.obj")
        write_obj(surface, path)
        paths.append(path)
    return paths


def parse_obj(path):
    """Minimal OBJ reader: vertices and faces, enough for round-trip checks."""
    vertices = []
    faces = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) != 4:
                    raise ValueError(f"{path}:{line_no}: malformed vertex")
                vertices.append([float(v) for v in parts[1:]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) < 3:
                    raise ValueError(f"{path}:{line_no}: face needs 3+ vertices")
                if any(k < 1 or k > len(vertices) for k in idx):
                    raise ValueError(f"{path}:{line_no}: vertex index out of range")
                faces.append(idx)
    return np.asarray(vertices, dtype=float), faces
