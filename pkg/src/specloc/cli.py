"""Command-line entry point: ``specloc {analyze,propagate,compare-rewire,lattice,replay}``.

Every run writes ``manifest.json`` next to its outputs; passing that file back
through ``--config`` (or ``specloc replay``) reproduces the CSVs bit for bit.
Exit codes: 0 ok, 2 usage, 3 validation, 4 numeric, 5 I/O.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._rng import derive_seed, rng_for
from .errors import (
    GenerationError,
    InapplicableCheckError,
    NumericError,
    ValidationError,
)
from .graph import (
    GENERATOR_KINDS,
    RANDOM_KINDS,
    degree_stats,
    generate,
    load_graph,
    normalized_laplacian,
)
from .io import RunManifest, write_json, write_table
from .lattice import (
    AndersonChain,
    SpringLattice,
    anderson_modes,
    density_of_states,
    ensemble_map,
    fit_gamma,
    localization_length,
    mode_localization_lengths,
    spring_dynamical_matrix,
    vibration_modes,
)
from .propagation import PropagationConfig, coefficient_decay_check, propagate
from .rewiring import ADD_RULES, RewireConfig, disorder_reduction_experiment
from .spectral import band_participation, column_participation, eigendecompose

log = logging.getLogger("specloc")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4, 5
_NOT_CONFIG = {"out", "config", "command", "func", "verbose"}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SPECLOC_THREADS", "1")))
    except ValueError:
        return 1


# ------------------------------------------------------------------ inputs


def _graph(a):
    if a.input:
        return load_graph(a.input, a.input_format)
    kind = a.generate
    params = {}
    if kind == "grid2d":
        rows = a.rows if a.rows is not None else a.n
        params = {"rows": rows, "cols": a.cols if a.cols is not None else rows}
    elif kind == "erdos_renyi":
        params = {"n": a.n, "p": a.p}
    elif kind == "barabasi_albert":
        params = {"n": a.n, "m": a.m}
    else:
        params = {"n": a.n}
    params = {k: v for k, v in params.items() if v is not None}
    seed = None
    if kind in RANDOM_KINDS:
        seed = a.graph_seed if a.graph_seed is not None else derive_seed(a.seed, "graph")
    return generate(kind, seed=seed, **params)


def _signal(a, n):
    kind = a.signal or "gaussian"
    if kind == "gaussian":
        if a.dim < 1:
            raise ValidationError(f"--dim must be >= 1, got {a.dim}")
        return rng_for(derive_seed(a.seed, "signal")).standard_normal((n, a.dim))
    if kind == "onehot":
        if not (0 <= a.node < n):
            raise ValidationError(f"--node {a.node} out of range for {n} nodes")
        x = np.zeros((n, 1))
        x[a.node, 0] = 1.0
        return x
    if not a.signal_file:
        raise ValidationError("--signal file requires --signal-file PATH")
    path = Path(a.signal_file)
    if path.suffix == ".npy":
        x = np.load(path)
    else:
        x = np.loadtxt(path, delimiter="," if path.suffix == ".csv" else None, ndmin=2)
    return np.asarray(x, dtype=float)


def _manifest(a) -> RunManifest:
    cfg = {k: v for k, v in vars(a).items() if k not in _NOT_CONFIG}
    return RunManifest.create(a.command, cfg, a.seed)


# ------------------------------------------------------------------ commands


def cmd_analyze(a) -> int:
    out = Path(a.out)
    g = _graph(a)
    basis = eigendecompose(normalized_laplacian(g))
    p = column_participation(basis.eigenvectors)
    write_table(out, "spectrum", ["band_index", "lambda", "eigvec_participation"],
                [(i, lam, pi) for i, (lam, pi) in enumerate(zip(basis.eigenvalues, p))],
                a.format)
    stats = degree_stats(g)
    write_json(out / "degree_stats.json",
               {"n_nodes": g.n_nodes, "n_edges": g.n_edges, **stats.to_dict()})
    write_json(out / "graph.json", g.to_dict())
    write_json(out / "spectrum_meta.json", {
        "degenerate_bands": np.flatnonzero(basis.degenerate).tolist(),
        "bipartite": bool(basis.eigenvalues[-1] >= 2.0 - 1e-9),
        "connected": g.is_connected(),
    })
    if a.signal is not None:
        bands = band_participation(basis, _signal(a, g.n_nodes))
        write_table(out, "band_participation",
                    ["band_index", "lambda", "coeff_norm", "p_lambda", "present"],
                    [(b.band_index, b.eigenvalue, b.coeff_norm, b.p, b.present) for b in bands],
                    a.format)
    _manifest(a).write(out)
    return EXIT_OK


def _metric_rows(run):
    lam = run.basis.eigenvalues
    for m in run.metrics:
        for j in range(lam.size):
            yield (m.layer, lam[j], m.coeff_norms[j], m.band_p[j], m.dirichlet_energy,
                   m.feature_distance)


_METRIC_HEADER = ["layer", "lambda", "coeff_norm", "p_lambda", "dirichlet_energy",
                  "feature_distance"]


def cmd_propagate(a) -> int:
    out = Path(a.out)
    if a.check_decay and (a.rewire or a.nonlinearity != "none"
                          or a.operator != "laplacian_complement"):
        raise InapplicableCheckError(
            "--check-decay needs a linear, static laplacian_complement run "
            "(no --rewire, --nonlinearity none)"
        )
    g = _graph(a)
    x0 = _signal(a, g.n_nodes)
    cfg = PropagationConfig(a.operator, a.depth, a.nonlinearity, a.record_every)
    run = propagate(g, x0, cfg)
    write_table(out, "metrics", _METRIC_HEADER, _metric_rows(run), a.format)
    status = EXIT_OK
    summary = {"bipartite": run.bipartite, "warnings": list(run.warnings),
               "recorded_layers": [m.layer for m in run.metrics]}
    if a.check_decay:
        rep = coefficient_decay_check(run.basis, run)
        write_json(out / "decay.json", {
            "passed": rep.passed,
            "layers": list(rep.layers),
            "lambda": rep.eigenvalues,
            "max_residual": rep.max_residual,
            "worst_band": rep.worst_band,
        })
        summary["decay_passed"] = rep.passed
        if not rep.passed:
            print(f"decay law violated (worst band {rep.worst_band}, residual "
                  f"{rep.max_residual[rep.worst_band]:.3g})", file=sys.stderr)
            status = EXIT_NUMERIC
    if a.rewire:
        rcfg = RewireConfig(a.alpha, derive_seed(a.seed, "rewire"), a.add_rule, a.per_layer)
        report = disorder_reduction_experiment(g, x0, cfg, rcfg, a.trials, _threads())
        write_json(out / "rewire_report.json", report.to_dict())
        for name, s in report.summaries.items():
            write_table(out, f"rewire_{name}",
                        ["layer", "baseline", "rewired_mean", "rewired_stderr", "delta",
                         "ci95_low", "ci95_high"], s.rows(), a.format)
    write_json(out / "propagation_summary.json", summary)
    _manifest(a).write(out)
    return status


def _lattice_member(a, disorder, member):
    seed = derive_seed(a.seed, "lattice", member)
    if a.model == "anderson":
        chain = AndersonChain(a.n, disorder, a.hopping, a.boundary or "open", seed)
        return anderson_modes(chain), chain.positions()
    dim = 1 if a.model == "spring1d" else 2
    lat = SpringLattice(dim, a.n, disorder, a.distribution, a.boundary or "periodic", seed)
    modes = vibration_modes(spring_dynamical_matrix(lat))
    return modes, (lat.positions() if dim == 1 else None)


def _spectrum_rows(modes, positions):
    p = column_participation(modes.eigenvectors)
    if positions is None:
        xi = np.full(p.size, np.nan)
    else:
        xi = mode_localization_lengths(modes, positions)
    return [(i, w, pi, x) for i, (w, pi, x) in enumerate(zip(modes.frequencies, p, xi))]


def _target_xi(a, modes, positions):
    if positions is None:
        raise ValidationError("localization sweeps need a 1D model")
    target = a.target if a.target is not None else (0.0 if a.model == "anderson" else 1.0)
    i = int(np.argmin(np.abs(modes.frequencies - target)))
    return localization_length(modes.eigenvectors[:, i], positions)


def _parse_sweep(a):
    key, _, values = a.sweep.partition("=")
    expected = "w" if a.model == "anderson" else "eps"
    if key.strip() != expected or not values:
        raise ValidationError(f"--sweep for model {a.model} must look like '{expected}=v1,v2,...'")
    try:
        return key.strip(), [float(v) for v in values.split(",")]
    except ValueError:
        raise ValidationError(f"bad sweep values in {a.sweep!r}") from None


def cmd_lattice(a) -> int:
    out = Path(a.out)
    if a.seeds < 1:
        raise ValidationError("--seeds must be >= 1")
    members = range(a.seeds)
    workers = _threads()
    if a.sweep is None:
        disorder = a.w if a.model == "anderson" else a.eps
        runs = ensemble_map(lambda s: _lattice_member(a, disorder, s), members, workers)
        modes, pos = runs[0]
        rows = _spectrum_rows(modes, pos)
        write_table(out, "spectrum", ["mode_index", "omega", "participation", "xi_or_inf"],
                    rows, a.format)
        _write_dos(a, out, "dos", [m.frequencies for m, _ in runs])
        ps = np.concatenate([column_participation(m.eigenvectors) for m, _ in runs])
        write_json(out / "summary.json", {
            "model": a.model, "disorder": disorder, "members": a.seeds,
            "omega_max": float(max(m.frequencies[-1] for m, _ in runs)),
            "min_participation": float(ps.min()),
            "mean_participation": float(ps.mean()),
            "fraction_below_0.1": float(np.mean(ps < 0.1)),
        })
        _manifest(a).write(out)
        return EXIT_OK

    key, values = _parse_sweep(a)
    medians = []
    for val in values:
        runs = ensemble_map(lambda s: _lattice_member(a, val, s), members, workers)
        modes, pos = runs[0]
        tag = f"{key}={val:g}"
        write_table(out, f"spectrum_{tag}", ["mode_index", "omega", "participation", "xi_or_inf"],
                    _spectrum_rows(modes, pos), a.format)
        _write_dos(a, out, f"dos_{tag}", [m.frequencies for m, _ in runs])
        medians.append(float(np.median([_target_xi(a, m, p) for m, p in runs])))
    _manifest(a).write(out)
    fit = fit_gamma(list(zip(values, medians)))
    write_json(out / "sweep.json", {"parameter": key, **fit.to_dict(),
                                    "xi_medians": medians, "members": a.seeds})
    return EXIT_OK


def _write_dos(a, out, stem, freq_lists):
    f = np.concatenate(freq_lists)
    lower = float(f.min()) if a.model == "anderson" else 0.0
    dos = density_of_states(f, a.bins, lower=lower)
    rows = [(lo, hi, d) for lo, hi, d in zip(dos.edges[:-1], dos.edges[1:], dos.density)]
    write_table(out, stem, ["bin_left", "bin_right", "density"], rows, a.format)


def cmd_replay(a) -> int:
    manifest = RunManifest.load(a.manifest)
    return main([manifest.command, "--config", str(a.manifest), "--out", a.out])


# ------------------------------------------------------------------ parser


def _common(p):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON config or run manifest; explicit flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-v", "--verbose", action="store_true")


def _graph_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="edge list (.txt/.csv) or graph JSON")
    src.add_argument("--generate", choices=GENERATOR_KINDS)
    p.add_argument("--input-format", choices=["whitespace", "csv"])
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float, help="erdos_renyi edge probability")
    p.add_argument("--m", type=int, help="barabasi_albert attachments per node")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--graph-seed", type=int,
                   help="generator seed (default: derived from --seed)")


def _signal_args(p, default):
    p.add_argument("--signal", choices=["gaussian", "onehot", "file"], default=default)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--node", type=int, default=0)
    p.add_argument("--signal-file")


def _propagate_args(p):
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--operator", choices=["laplacian_complement", "gcn_selfloop"],
                   default="laplacian_complement")
    p.add_argument("--nonlinearity", choices=["none", "relu"], default="none")
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--check-decay", action="store_true")
    p.add_argument("--rewire", action="store_true")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=16)
    p.add_argument("--add-rule", choices=ADD_RULES, default="uniform_nonneighbor")
    p.add_argument("--per-layer", action=argparse.BooleanOptionalAction, default=True)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="specloc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"specloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("analyze", help="Laplacian spectrum, participation and degree stats")
    _common(p)
    _graph_args(p)
    _signal_args(p, default=None)
    p.set_defaults(func=cmd_analyze)
    subs["analyze"] = p

    for name, forced in (("propagate", False), ("compare-rewire", True)):
        p = sub.add_parser(name, help="layer-wise over-smoothing metrics"
                           + (" with rewired A/B report" if forced else ""))
        _common(p)
        _graph_args(p)
        _signal_args(p, default="gaussian")
        _propagate_args(p)
        p.set_defaults(func=cmd_propagate)
        if forced:
            p.set_defaults(rewire=True)
        subs[name] = p

    p = sub.add_parser("lattice", help="disordered chain / spring lattice spectra and sweeps")
    _common(p)
    p.add_argument("--model", choices=["anderson", "spring1d", "spring2d"], default="anderson")
    p.add_argument("--n", type=int, default=256, help="sites (per side for spring2d)")
    p.add_argument("--w", type=float, default=0.0, help="Anderson disorder width W")
    p.add_argument("--eps", type=float, default=0.0, help="spring disorder strength")
    p.add_argument("--hopping", type=float, default=1.0)
    p.add_argument("--distribution", choices=["bimodal", "uniform"], default="bimodal")
    p.add_argument("--boundary", choices=["open", "periodic"])
    p.add_argument("--seeds", type=int, default=1, help="ensemble members per disorder value")
    p.add_argument("--sweep", help="e.g. 'w=1,2,4' or 'eps=0.2,0.4,0.8'")
    p.add_argument("--target", type=float, help="energy/frequency of the swept mode")
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(func=cmd_lattice)
    subs["lattice"] = p

    p = sub.add_parser("replay", help="re-run a manifest into a new output directory")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay, seed=0)
    subs["replay"] = p
    return parser, subs


def _load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "command" in data and isinstance(data.get("config"), dict):
        return data["config"]
    if not isinstance(data, dict):
        raise ValidationError(f"config {path} must be a JSON object")
    return data


def parse_args(argv):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = _load_config(args.config)
        sp = subs[args.command]
        known = {act.dest for act in sp._actions}
        unknown = set(cfg) - known
        if unknown:
            sp.error(f"unknown keys in config: {sorted(unknown)}")
        explicit = set(argv)
        if "--input" in explicit:
            cfg.pop("generate", None)
        if "--generate" in explicit:
            cfg.pop("input", None)
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    if args.command in ("analyze", "propagate", "compare-rewire"):
        if not (args.input or args.generate):
            subs[args.command].error("one of --input or --generate is required")
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING)
    try:
        return args.func(args)
    except InapplicableCheckError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, GenerationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
