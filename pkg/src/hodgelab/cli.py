"""Command line front end.

Every command prints a report: tab-separated ``key<TAB>value`` lines by
default, or one JSON document with ``--json``.  Reports contain no
wall-clock data unless ``--timings`` is given, so a fixed configuration
reproduces its output byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import catalog
from .complex import euler_characteristic, label_boundary, rational_betti
from .curvature import bochner_screen, read_samples, sine_form, weitzenboeck_flat_residual
from .derham import DEFAULT_ORDER, harmonic_pairing, named_form, stokes_residual
from .doubling import double_complex, doubled_hodge, eigen_betti, euler_two_ways, v4_residuals
from .errors import HodgeLabError
from .hodge import RANK_TOL, HodgeComplex
from .meshio import Mesh, format_mesh, read_mesh
from .metric import make_metric, mesh_quality

COMMANDS = ("betti", "hodge", "spectrum", "heat", "double", "derham", "quality", "bochner",
            "catalog")
EXIT_USAGE = 2
EXIT_IO = 7


@dataclass
class RunConfig:
    command: str
    catalog: str | None = None
    mesh: str | None = None
    m1: str | None = None
    m2: str | None = None
    metric: str | None = None
    tol_rank: float = RANK_TOL
    quad_order: int = DEFAULT_ORDER
    json: bool = False
    threads: int | None = None
    figures: str | None = None
    timings: bool = False
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.tol_rank <= 0:
            raise HodgeLabError("--tol-rank must be positive")
        if self.quad_order < 1:
            raise HodgeLabError("--quad-order must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise HodgeLabError("--threads must be >= 1")

    def echo(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("extra", "json", "timings")}
        out.update(self.extra)
        return out


# -- helpers -------------------------------------------------------------------------

def _load_mesh(cfg: RunConfig, default: str | None = None) -> Mesh:
    if cfg.catalog and cfg.mesh:
        raise HodgeLabError("give either --catalog or --mesh, not both")
    if cfg.mesh:
        return read_mesh(cfg.mesh)
    name = cfg.catalog or default
    if name is None:
        raise HodgeLabError("no input: use --catalog NAME or --mesh PATH")
    try:
        return catalog.load(name)
    except KeyError as exc:
        raise HodgeLabError(exc.args[0]) from None


def _labels(cfg: RunConfig, mesh: Mesh):
    if cfg.m1 is None and cfg.m2 is None and (mesh.m1_facets or mesh.m2_facets):
        return mesh.file_labels()
    return label_boundary(mesh.complex, cfg.m1 or "none", cfg.m2 or "rest")


def _metric(cfg: RunConfig, mesh: Mesh):
    kind = cfg.metric or ("whitney" if mesh.geometry is not None else "identity")
    return make_metric(mesh.complex, mesh.geometry, kind), kind


def _hodge(cfg: RunConfig, mesh: Mesh) -> tuple:
    labels = _labels(cfg, mesh)
    metric, kind = _metric(cfg, mesh)
    return HodgeComplex(mesh.complex, labels, metric, rank_tol=cfg.tol_rank), kind


def _degrees(hc: HodgeComplex, cfg: RunConfig) -> list:
    p = cfg.extra.get("degree")
    if p is None:
        return list(range(hc.dim + 1))
    if not 0 <= p <= hc.dim:
        raise HodgeLabError(f"--degree {p} outside 0..{hc.dim}")
    return [p]


def _figure_path(cfg: RunConfig, stem: str) -> Path:
    return Path(cfg.figures) / f"{stem}.png"


# -- commands ------------------------------------------------------------------------------

def cmd_betti(cfg: RunConfig) -> dict:
    mesh = _load_mesh(cfg)
    hc, kind = _hodge(cfg, mesh)
    harmonic = hc.betti_numbers()
    exact = rational_betti(mesh.complex, hc.labels)
    chi = euler_characteristic(mesh.complex, hc.labels)
    out = {"mesh": mesh.name, "metric": kind, "fvector": list(mesh.complex.fvector),
           "betti": harmonic, "betti_rational": exact, "agree": harmonic == exact,
           "euler_counted": chi,
           "euler_betti": int(sum((-1) ** p * b for p, b in enumerate(exact)))}
    if cfg.figures:
        from .plotting import betti_figure

        out["figure"] = betti_figure(harmonic, exact, _figure_path(cfg, "betti"), mesh.name)
    return out


def cmd_hodge(cfg: RunConfig) -> dict:
    mesh = _load_mesh(cfg)
    hc, kind = _hodge(cfg, mesh)
    rng = np.random.default_rng(cfg.extra.get("seed", 0))
    n = cfg.extra.get("samples", 100)
    out = {"mesh": mesh.name, "metric": kind, "samples": n}
    for p in _degrees(hc, cfg):
        if hc.size(p) == 0:
            continue
        w = rng.standard_normal((hc.size(p), n))
        dec = hc.decompose(w, p)
        parts = (dec.harmonic, dec.exact, dec.coexact)
        norm = hc.norm(w, p)
        ortho = 0.0
        for i in range(3):
            for j in range(i + 1, 3):
                ip = np.abs(np.sum(parts[i] * (hc.gram_sparse(p) @ parts[j]), axis=0))
                ortho = max(ortho, float(np.max(ip / norm ** 2)))
        lap = hc.laplacian(p) @ w
        lhs = np.sum(lap * (hc.gram_sparse(p) @ w), axis=0)
        rhs = hc.norm(hc.d(p) @ w, p + 1) ** 2 if p < hc.dim else 0.0
        if p > 0:
            rhs = rhs + hc.norm(hc.codifferential(p) @ w, p - 1) ** 2
        quad = float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), norm ** 2)))
        out[f"p{p}"] = {"residual": float(np.max(dec.residual)), "orthogonality": ortho,
                        "quadratic_identity": quad, "betti": hc.betti(p)}
    return out


def cmd_spectrum(cfg: RunConfig) -> dict:
    mesh = _load_mesh(cfg)
    hc, kind = _hodge(cfg, mesh)
    count = cfg.extra.get("count", 8)
    out = {"mesh": mesh.name, "metric": kind, "rank_tol": cfg.tol_rank}
    spectra, cutoff = {}, {}
    for p in _degrees(hc, cfg):
        spec = hc.spectrum(p)
        vals = np.sort(spec.eigenvalues)
        summary = spec.summary()
        summary["lowest"] = [float(v) for v in vals[:count]]
        out[f"p{p}"] = summary
        spectra[p] = vals
        if vals.size:
            cutoff[p] = cfg.tol_rank * float(np.abs(vals).max())
    if cfg.figures:
        from .plotting import spectrum_figure

        out["figure"] = spectrum_figure(spectra, cutoff, _figure_path(cfg, "spectrum"))
    return out


def cmd_heat(cfg: RunConfig) -> dict:
    mesh = _load_mesh(cfg)
    hc, kind = _hodge(cfg, mesh)
    rng = np.random.default_rng(cfg.extra.get("seed", 0))
    times = cfg.extra.get("times") or [0.1, 1.0, 10.0]
    n = cfg.extra.get("samples", 20)
    degrees = _degrees(hc, cfg)
    out = {"mesh": mesh.name, "metric": kind, "times": times, "samples": n, "slack": 1e-8}
    for p in degrees:
        if hc.size(p) == 0:
            continue
        w = rng.standard_normal((hc.size(p), n))
        ph = hc.harmonic_projection(w, p)
        lam1 = hc.spectrum(p).lambda1
        base = hc.norm(w - ph, p)
        worst, ratios = -np.inf, []
        for t in times:
            dist = hc.norm(hc.heat_transient(w, p, t), p)
            bound = np.exp(-lam1 * t) * base if np.isfinite(lam1) else 0.0 * base
            worst = max(worst, float(np.max(dist - (1 + 1e-8) * bound)))
            ratios.append(dist / np.where(base > 0, base, 1.0))
        out[f"p{p}"] = {"lambda1": None if not np.isfinite(lam1) else float(lam1),
                        "bound_holds": bool(worst <= 0.0),
                        "max_ratio": [float(r.max()) for r in ratios]}
        if cfg.figures and np.isfinite(lam1):
            from .plotting import heat_figure

            out[f"p{p}"]["figure"] = heat_figure(times, np.array(ratios), lam1,
                                                 _figure_path(cfg, f"heat_p{p}"))
    return out


def cmd_double(cfg: RunConfig) -> dict:
    mesh = _load_mesh(cfg)
    labels = _labels(cfg, mesh)
    metric, kind = _metric(cfg, mesh)
    q = double_complex(mesh.complex, labels, metric)
    hc = doubled_hodge(q, cfg.tol_rank)
    exact = rational_betti(mesh.complex, labels)
    mp = [eigen_betti(q, -1, 1, p, hc) for p in range(q.W.dim + 1)]
    counted, harmonic = euler_two_ways(q, hc)
    out = {"mesh": mesh.name, "metric": kind, "W_fvector": list(q.W.fvector),
           "W_simplicial": q.W.is_simplicial,
           "betti_W": hc.betti_numbers(),
           "betti_minus_plus": mp, "betti_relative_M1": exact, "agree": mp == exact,
           "euler_counted": counted, "euler_harmonic": harmonic}
    out.update({f"v4_{k}": v for k, v in v4_residuals(q).items()})
    out["tau1"] = [int(v) for v in q.tau1]
    out["tau2"] = [int(v) for v in q.tau2]
    target = cfg.extra.get("output")
    if target:
        vid = q.W.vertex_ids
        comment = (f"double of {mesh.name}\n"
                   "tau1 " + " ".join(str(int(vid[k])) for k in q.tau1) + "\n"
                   "tau2 " + " ".join(str(int(vid[k])) for k in q.tau2))
        Path(target).write_text(format_mesh(q.W, None, None, comment), encoding="utf-8")
        out["output"] = str(target)
    return out


def cmd_derham(cfg: RunConfig) -> dict:
    mesh = _load_mesh(cfg, default="torus-16x16")
    if mesh.geometry is None:
        raise HodgeLabError("the de Rham map needs vertex coordinates")
    hc, kind = _hodge(cfg, mesh)
    d = mesh.geometry.ambient_dim
    p = cfg.extra.get("degree")
    p = 1 if p is None else p
    names = cfg.extra.get("forms") or ["dx", "dy", "dz"][:d]
    forms = [named_form(n, d) for n in names]
    if any(f.degree != p for f in forms):
        raise HodgeLabError(f"all paired forms must have degree {p}")
    res = harmonic_pairing(hc, mesh.geometry, forms, p, cfg.quad_order)
    sv = [float(s) for s in res.singular_values]
    out = {"mesh": mesh.name, "metric": kind, "degree": p, "forms": names,
           "pairing_rank": res.rank, "harmonic_dim": res.betti, "singular_values": sv,
           "sv_ratio": (sv[-1] / sv[0]) if sv and sv[0] > 0 else None,
           "quad_order": cfg.quad_order}
    stokes = cfg.extra.get("stokes_form", "sinpx-dy" if d == 2 else None)
    if stokes:
        form = named_form(stokes, d)
        orders = sorted({2, 4, 6, cfg.quad_order})
        res = [stokes_residual(mesh.complex, mesh.geometry, form, q, hc.metric) for q in orders]
        out["stokes_form"] = stokes
        out["stokes_orders"] = orders
        out["stokes_residuals"] = res
        out["stokes_monotone"] = all(a > b for a, b in zip(res, res[1:]))
    return out


def cmd_quality(cfg: RunConfig) -> dict:
    mesh = _load_mesh(cfg)
    if mesh.geometry is None:
        raise HodgeLabError("mesh quality needs vertex coordinates")
    rep = mesh_quality(mesh.complex, mesh.geometry)
    return {"mesh": mesh.name, **rep.as_dict()}


def cmd_bochner(cfg: RunConfig) -> dict:
    path = cfg.extra.get("samples_file")
    if not path:
        raise HodgeLabError("bochner needs --samples FILE")
    samples = read_samples(path, cfg.extra.get("dim"))
    p = cfg.extra.get("degree")
    p = 1 if p is None else p
    verdict = bochner_screen(samples, p, cfg.extra.get("infinite_volume", False),
                             absolute=cfg.extra.get("absolute", False),
                             weitzenboeck_attested=cfg.extra.get("attest", False))
    out = {"samples": len(samples), "degree": p, "absolute": verdict.absolute,
           "conclusion": verdict.conclusion, "failed": list(verdict.failed)}
    if cfg.catalog or cfg.mesh:
        mesh = _load_mesh(cfg)
        form = sine_form(cfg.extra.get("flat_form", "acceptance"))
        out["flat_form"] = form.name
        out["flat_residual"] = weitzenboeck_flat_residual(
            mesh.complex, mesh.geometry, form, cfg.quad_order,
            labels=_labels(cfg, mesh) if (cfg.m1 or cfg.m2) else None)
    return out


def cmd_catalog(cfg: RunConfig) -> str | dict:
    name = cfg.extra.get("name")
    if not name:
        return {"names": list(catalog.CATALOG_NAMES)}
    cfg.catalog = name
    mesh = _load_mesh(cfg)
    labels = _labels(cfg, mesh) if (cfg.m1 or cfg.m2) else None
    return format_mesh(mesh.complex, mesh.geometry, labels, comment=f"catalog {mesh.name}")


DISPATCH = {"betti": cmd_betti, "hodge": cmd_hodge, "spectrum": cmd_spectrum,
            "heat": cmd_heat, "double": cmd_double, "derham": cmd_derham,
            "quality": cmd_quality, "bochner": cmd_bochner, "catalog": cmd_catalog}


def run(cfg: RunConfig) -> dict | str:
    """Execute one command; returns the report (or mesh text for ``catalog``)."""
    cfg.validate()
    if cfg.threads:
        from threadpoolctl import threadpool_limits

        limiter = threadpool_limits(limits=cfg.threads)
    else:
        limiter = nullcontext()
    start = time.perf_counter()
    with limiter, warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = DISPATCH[cfg.command](cfg)
    if isinstance(result, str):
        return result
    report = {"command": cfg.command, "config": cfg.echo(), "result": result}
    notes = sorted({str(w.message) for w in caught})
    if notes:
        report["warnings"] = notes
    if cfg.timings:
        report["timings"] = {"wall_seconds": time.perf_counter() - start}
    return report


# -- output -----------------------------------------------------------------------------

def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _scalar(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _flatten(prefix: str, value, lines: list) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, lines)
    elif isinstance(value, list):
        lines.append(f"{prefix}\t" + " ".join(_scalar(v) for v in value))
    else:
        lines.append(f"{prefix}\t{_scalar(value)}")


def render(report, as_json: bool = False) -> str:
    if isinstance(report, str):
        return report
    report = _plain(report)
    if as_json:
        return json.dumps(report, indent=2, sort_keys=False) + "\n"
    lines = []
    _flatten("", report, lines)
    return "\n".join(lines) + "\n"


# -- argument parsing --------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--catalog", help="built-in mesh name, e.g. torus-8x8")
    p.add_argument("--mesh", help="path to a mesh file")
    p.add_argument("--m1", help="M1 selector: boundary | none | component:i[,j]")
    p.add_argument("--m2", help="M2 selector: rest | boundary | none | component:i[,j]")
    p.add_argument("--metric", choices=("whitney", "lumped", "identity"),
                   help="cochain metric (default: whitney when coordinates exist)")
    p.add_argument("--tol-rank", type=float, default=RANK_TOL,
                   help=f"relative eigenvalue cutoff for the kernel (default {RANK_TOL:g})")
    p.add_argument("--quad-order", type=int, default=DEFAULT_ORDER,
                   help=f"quadrature exactness degree (default {DEFAULT_ORDER})")
    p.add_argument("--json", action="store_true", help="emit one JSON document")
    p.add_argument("--threads", type=int, help="cap BLAS/LAPACK threads")
    p.add_argument("--figures", metavar="DIR", help="also render PNG figures into DIR")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hodgelab",
                                     description="Discrete Hodge and de Rham laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        if name in ("hodge", "spectrum", "heat", "derham", "bochner"):
            p.add_argument("--degree", type=int)
        if name in ("hodge", "heat"):
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--samples", type=int, default=100 if name == "hodge" else 20)
        if name == "heat":
            p.add_argument("--times", type=float, nargs="+")
        if name == "spectrum":
            p.add_argument("--count", type=int, default=8, help="eigenvalues listed per degree")
        if name == "double":
            p.add_argument("--output", help="write the doubled mesh to this path")
        if name == "derham":
            p.add_argument("--forms", nargs="+", help="named 1-forms to pair (default dx dy)")
            p.add_argument("--stokes-form", default=None, help="form for the Stokes check")
        if name == "bochner":
            p.add_argument("--samples", dest="samples_file", help="curvature sample file")
            p.add_argument("--dim", type=int, help="manifold dimension if not in the file")
            p.add_argument("--infinite-volume", action="store_true")
            p.add_argument("--absolute", action="store_true")
            p.add_argument("--attest", action="store_true",
                           help="attest the interior Weitzenboeck curvature condition")
            p.add_argument("--flat-form", choices=("acceptance", "mixed"), default="acceptance")
        if name == "catalog":
            p.add_argument("name", nargs="?", help="mesh to emit; omit to list names")
    return parser


_COMMON = ("command", "catalog", "mesh", "m1", "m2", "metric", "tol_rank", "quad_order",
           "json", "threads", "figures", "timings")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    extra = {k: v for k, v in vars(ns).items() if k not in _COMMON and v is not None}
    return RunConfig(**{k: getattr(ns, k) for k in _COMMON}, extra=extra)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = config_from_args(ns)
    try:
        report = run(cfg)
    except HodgeLabError as exc:
        print(f"hodgelab: error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status
    except OSError as exc:
        print(f"hodgelab: error [E_IO]: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(render(report, cfg.json))
    return 0


if __name__ == "__main__":
    sys.exit(main())
