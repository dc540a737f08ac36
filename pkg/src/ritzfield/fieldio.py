"""Field and checkpoint serialization.

1D/2D fields are CSV with a self-describing comment header; 3D fields use the
legacy VTK structured-points container so standard viewers can render
isosurfaces directly.  Values are written with shortest-roundtrip formatting,
so export followed by load reproduces every value bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass
class FieldFile:
    values: np.ndarray              # shape (n,)*d, row-major
    domain: tuple                   # ((lo, hi), ...) per axis
    epsilon: float = float("nan")
    m0: float = float("nan")
    seed: int = -1
    energy: float = float("nan")

    @property
    def dimension(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape


def _fmt(x: float) -> str:
    return repr(float(x))


def _meta_items(f: FieldFile):
    return [("epsilon", _fmt(f.epsilon)), ("m0", _fmt(f.m0)),
            ("seed", str(int(f.seed))), ("energy", _fmt(f.energy))]


def write_field(path: str, f: FieldFile) -> None:
    if f.dimension in (1, 2):
        _write_csv(path, f)
    elif f.dimension == 3:
        _write_vtk(path, f)
    else:
        raise ConfigurationError(f"cannot export a {f.dimension}-dimensional field")


def read_field(path: str) -> FieldFile:
    with open(path) as fh:
        first = fh.readline()
    if first.startswith("# vtk"):
        return _read_vtk(path)
    return _read_csv(path)


def _write_csv(path: str, f: FieldFile) -> None:
    lines = ["# ritzfield field v1"]
    lines.append(f"# dimension: {f.dimension}")
    lines.append("# shape: " + " ".join(str(n) for n in f.shape))
    lines.append("# domain: " + " ".join(f"{_fmt(lo)} {_fmt(hi)}" for lo, hi in f.domain))
    for key, val in _meta_items(f):
        lines.append(f"# {key}: {val}")
    arr = f.values if f.dimension == 2 else f.values.reshape(1, -1)
    for row in arr:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_csv(path: str) -> FieldFile:
    meta: dict[str, str] = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("# ").strip()
                if ":" in body:
                    key, _, val = body.partition(":")
                    meta[key.strip()] = val.strip()
                continue
            rows.append([float(tok) for tok in line.split(",")])
    if "shape" not in meta:
        raise ConfigurationError(f"{path}: missing shape header")
    shape = tuple(int(tok) for tok in meta["shape"].split())
    values = np.array(rows).reshape(shape)
    dom_tokens = [float(tok) for tok in meta["domain"].split()]
    domain = tuple((dom_tokens[2 * i], dom_tokens[2 * i + 1]) for i in range(len(shape)))
    return FieldFile(
        values=values, domain=domain,
        epsilon=float(meta.get("epsilon", "nan")), m0=float(meta.get("m0", "nan")),
        seed=int(meta.get("seed", "-1")), energy=float(meta.get("energy", "nan")),
    )


def _write_vtk(path: str, f: FieldFile) -> None:
    nx, ny, nz = f.shape
    origin = [lo for lo, _ in f.domain]
    spacing = [(hi - lo) / n for (lo, hi), n in zip(f.domain, f.shape)]
    title = "ritzfield " + " ".join(f"{k}={v}" for k, v in _meta_items(f))
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} {nz}",
        "ORIGIN " + " ".join(_fmt(v) for v in origin),
        "SPACING " + " ".join(_fmt(v) for v in spacing),
        f"POINT_DATA {nx * ny * nz}",
        "SCALARS phi double",
        "LOOKUP_TABLE default",
    ]
    # VTK iterates x fastest; our arrays are indexed [x, y, z] row-major
    # (z fastest), so emit the Fortran-order ravel
    flat = f.values.ravel(order="F")
    lines.extend(_fmt(v) for v in flat)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_vtk(path: str) -> FieldFile:
    meta = {}
    dims = origin = spacing = None
    values: list[float] = []
    in_data = False
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if i == 1 and line.startswith("ritzfield"):
                for tok in line.split()[1:]:
                    if "=" in tok:
                        k, _, v = tok.partition("=")
                        meta[k] = v
                continue
            if line.startswith("DIMENSIONS"):
                dims = tuple(int(t) for t in line.split()[1:])
            elif line.startswith("ORIGIN"):
                origin = [float(t) for t in line.split()[1:]]
            elif line.startswith("SPACING"):
                spacing = [float(t) for t in line.split()[1:]]
            elif line.startswith("LOOKUP_TABLE"):
                in_data = True
            elif in_data and line:
                values.extend(float(t) for t in line.split())
    if dims is None or origin is None or spacing is None:
        raise ConfigurationError(f"{path}: not a structured-points field file")
    arr = np.array(values).reshape(dims, order="F")
    domain = tuple((o, o + s * n) for o, s, n in zip(origin, spacing, dims))
    return FieldFile(
        values=arr, domain=domain,
        epsilon=float(meta.get("epsilon", "nan")), m0=float(meta.get("m0", "nan")),
        seed=int(meta.get("seed", "-1")), energy=float(meta.get("energy", "nan")),
    )


def save_checkpoint(path: str, result) -> None:
    """Architecture triple, feature-map descriptor, domain, then the flat
    parameter vector in canonical order, one value per line."""
    cfg = result.config
    arch = result.params.arch
    fmap = result.fmap
    lines = ["# ritzfield checkpoint v1"]
    lines.append(f"arch {arch.input_dim} {arch.width} {arch.n_blocks}")
    if fmap is None:
        lines.append("fmap none")
    else:
        lines.append(
            f"fmap {fmap.kind} f_m={fmap.f_m} m_rff={fmap.m_rff} "
            f"scale={fmap.scale} seed={fmap.seed} wrap={int(fmap.wrap_inputs)}"
        )
    lines.append("domain " + " ".join(f"{_fmt(lo)} {_fmt(hi)}" for lo, hi in cfg.domain))
    lines.append(f"meta epsilon={_fmt(cfg.epsilon)} m0={_fmt(cfg.m0)} seed={cfg.seed}")
    lines.append(f"params {result.params.flat.size}")
    lines.extend(_fmt(v) for v in result.params.flat)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path: str):
    """Returns (NetParams, FeatureMap | None, domain, meta dict)."""
    from .features import build_feature_map
    from .network import Architecture, NetParams

    arch = fmap_spec = domain = None
    meta: dict[str, float] = {}
    flat: list[float] = []
    n_expected = -1
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            head, *rest = line.split()
            if head == "arch":
                arch = Architecture(int(rest[0]), int(rest[1]), int(rest[2]))
            elif head == "fmap":
                fmap_spec = rest
            elif head == "domain":
                vals = [float(t) for t in rest]
                domain = tuple((vals[2 * i], vals[2 * i + 1]) for i in range(len(vals) // 2))
            elif head == "meta":
                for tok in rest:
                    k, _, v = tok.partition("=")
                    meta[k] = float(v)
            elif head == "params":
                n_expected = int(rest[0])
            else:
                flat.append(float(head))
    if arch is None or domain is None or len(flat) != n_expected:
        raise ConfigurationError(f"{path}: malformed checkpoint")
    params = NetParams(arch, np.array(flat))
    fmap = None
    if fmap_spec and fmap_spec[0] != "none":
        kv = dict(tok.partition("=")[::2] for tok in fmap_spec[1:])
        periods = [hi - lo for lo, hi in domain]

        def opt(key, cast):
            return None if kv[key] == "None" else cast(kv[key])

        fmap = build_feature_map(
            fmap_spec[0], len(domain), periods,
            f_m=opt("f_m", int), m_rff=opt("m_rff", int), s=opt("scale", float),
            seed=int(kv["seed"]), wrap_inputs=bool(int(kv["wrap"])),
        )
    return params, fmap, domain, meta
