"""Command-line front end and file I/O.

Subcommands: generate, spectrum, dynamics, scan, eigenfreqs, reconstruct,
compare.  Every run echoes its effective configuration as a JSON line on
stdout and writes outputs atomically (temp file + rename), so a fixed seed
and config reproduce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import dynamics, network, probing, reconstruction, spectral
from .errors import (
    DegenerateSpacing,
    DisconnectedNetwork,
    GridTooCoarse,
    IncompleteSpectrum,
    NetprobeError,
    NotPositiveDefinite,
    RankDeficient,
    ValidationError,
)
from .oracle import NoisyOracle, SimulatorOracle, parse_probe_init

NUMERICAL_ERRORS = (
    NotPositiveDefinite,
    RankDeficient,
    IncompleteSpectrum,
    GridTooCoarse,
    DegenerateSpacing,
)


# ---------------------------------------------------------------------------
# Network (de)serialization


def save_network(spec: network.NetworkSpec, path: str | Path) -> None:
    """Write a NetworkSpec as JSON with edges normalized to (i, j) order."""
    payload = {
        "n": spec.n_nodes,
        "omega0": spec.omega0,
        "edges": [[i, j, h] for i, j, h in spec.sorted_edges()],
    }
    _atomic_write(path, json.dumps(payload, indent=2) + "\n")


def load_network(path: str | Path) -> network.NetworkSpec:
    """Read a NetworkSpec JSON file, with field-level schema errors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object at top level")
    for key, kind in (("n", int), ("omega0", (int, float)), ("edges", list)):
        if key not in data:
            raise ValidationError(f"{path}: missing required field '{key}'")
        if not isinstance(data[key], kind) or isinstance(data[key], bool):
            raise ValidationError(f"{path}: field '{key}' has wrong type")
    edges = []
    for idx, edge in enumerate(data["edges"]):
        if not (isinstance(edge, list) and len(edge) == 3):
            raise ValidationError(f"{path}: edges[{idx}] must be [i, j, h]")
        i, j, h = edge
        if not (isinstance(i, int) and isinstance(j, int)):
            raise ValidationError(f"{path}: edges[{idx}] endpoints must be integers")
        edges.append((min(i, j), max(i, j), float(h)) if i != j else (i, j, float(h)))
    return network.NetworkSpec(
        n_nodes=data["n"], omega0=float(data["omega0"]), edges=tuple(sorted(edges))
    )


# ---------------------------------------------------------------------------
# Output helpers


def _atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(c) if isinstance(c, float) else str(c) for c in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def save_matrix_csv(matrix: np.ndarray, path: str | Path) -> None:
    """Dense row-major CSV dump at full precision, no header."""
    lines = [",".join(_fmt(v) for v in row) for row in np.asarray(matrix, dtype=float)]
    _atomic_write(path, "\n".join(lines) + "\n")


def _echo_config(args: argparse.Namespace) -> None:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(json.dumps({"config": cfg}, default=str))


def _omega_grid(args: argparse.Namespace) -> np.ndarray:
    if args.omega_min >= args.omega_max:
        raise ValidationError("--omega-min must be below --omega-max")
    if args.steps < 2:
        raise ValidationError("--steps must be at least 2")
    return np.linspace(args.omega_min, args.omega_max, args.steps)


def _make_oracle(args: argparse.Namespace, spec: network.NetworkSpec):
    oracle = SimulatorOracle(spec, temperature=args.temperature)
    if getattr(args, "noise_sigma", 0.0):
        return NoisyOracle(oracle, sigma=args.noise_sigma, seed=getattr(args, "noise_seed", 0))
    return oracle


def _threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("NETPROBE_THREADS")
    return max(1, int(env)) if env else 1


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_generate(args: argparse.Namespace) -> int:
    kind: network.RecipeKind
    if args.recipe == "chain":
        kind = network.Chain(n=args.n, h=args.h)
    elif args.recipe == "periodic":
        kind = network.PeriodicChain(
            n=args.n, h_strong=args.h_strong, h_weak=args.h_weak, period=args.period
        )
    elif args.recipe == "shortcut":
        kind = network.ShortcutChain(
            n=args.n, h=args.h, shortcut=tuple(args.shortcut), h_shortcut=args.h_shortcut
        )
    elif args.recipe == "smallworld":
        kind = network.SmallWorld(
            n=args.n, h_chain=args.h_chain, h_shortcut=args.h_shortcut, n_shortcuts=args.n_shortcuts
        )
    else:
        kind = network.ErdosRenyi(n=args.n, h=args.h, p_edge=args.p_edge)
    recipe = network.TopologyRecipe(kind=kind, rng_seed=args.seed)
    spec = network.generate(recipe, args.omega0, require_connected=args.require_connected)
    save_network(spec, args.out)
    if args.adjacency_csv:
        save_matrix_csv(network.to_adjacency(spec).a, args.adjacency_csv)
    print(f"wrote {args.out} ({spec.n_nodes} nodes, {len(spec.edges)} edges)")
    return 0


def _node_set(args: argparse.Namespace) -> tuple[int, ...]:
    return tuple(args.pair) if getattr(args, "pair", None) else (args.node,)


def _cmd_spectrum(args: argparse.Namespace) -> int:
    spec = load_network(args.network)
    eig = spectral.diagonalize(network.to_adjacency(spec))
    g = spectral.probe_couplings(eig, _node_set(args))
    smooth = spectral.spectral_density_smooth(eig, g, args.k, _omega_grid(args), args.t_max)
    _csv(args.out, ["omega", "J"], zip(smooth.omegas, smooth.j))
    if args.comb_out:
        comb = spectral.spectral_density_comb(eig, g, args.k)
        _csv(
            args.comb_out,
            ["Omega_i", "weight", "J_binned"],
            zip(comb.omegas, comb.weights, comb.binned_density()),
        )
    print(f"wrote {args.out} ({len(smooth.omegas)} samples)")
    return 0


def _cmd_dynamics(args: argparse.Namespace) -> int:
    spec = load_network(args.network)
    adj = network.to_adjacency(spec)
    eig = spectral.diagonalize(adj)
    init = parse_probe_init(args.init)
    sys_tot = dynamics.assemble_total(adj, args.omega_s, args.k, _node_set(args))
    state0 = dynamics.initial_state(init, args.omega_s, eig, args.temperature)
    times = np.linspace(0.0, args.t_max, args.steps)
    rows = []
    for t in times:
        qq, pp = dynamics.probe_second_moments(sys_tot, state0, float(t))
        rows.append((float(t), 0.5 * (args.omega_s * qq + pp / args.omega_s) - 0.5))
    _csv(args.out, ["t", "mean_n"], rows)
    print(f"wrote {args.out} ({len(rows)} time points)")
    return 0


def _cmd_scan(args: argparse.Namespace) -> int:
    spec = load_network(args.network)
    oracle = _make_oracle(args, spec)
    schedule = probing.ProbeSchedule(
        omegas=_omega_grid(args),
        t=args.t,
        k=args.k,
        init=parse_probe_init(args.init),
        temperature=args.temperature,
        node_set=_node_set(args),
    )
    result = probing.scan_density(oracle, schedule, threads=_threads(args))
    _csv(
        args.out,
        ["omega_S", "J_est", "status"],
        zip(result.omegas, result.j_est, result.status),
    )
    n_ok = int(result.ok().sum())
    print(f"wrote {args.out} ({n_ok}/{len(result.omegas)} points estimated)")
    return 0


def _cmd_eigenfreqs(args: argparse.Namespace) -> int:
    spec = load_network(args.network)
    oracle = _make_oracle(args, spec)
    grid = _omega_grid(args)
    t = args.t
    if t is None:
        eig = spectral.diagonalize(network.to_adjacency(spec))
        t = 3.0 * spectral.recurrence_time(eig)
    expected = args.expected if args.expected is not None else spec.n_nodes
    schedule = probing.ProbeSchedule(
        omegas=grid,
        t=t,
        k=args.k,
        init=parse_probe_init(args.init),
        temperature=args.temperature,
        node_set=_node_set(args),
    )
    result = probing.detect_eigenfrequencies(
        oracle, schedule, expected, prominence_factor=args.prominence_factor, threads=_threads(args)
    )
    payload = {
        "omegas": list(result.omegas),
        "heights": list(result.heights),
        "complete": result.complete,
        "expected_count": result.expected_count,
        "grid_step": result.grid_step,
        "interaction_time": t,
    }
    _atomic_write(args.out, json.dumps(payload, indent=2) + "\n")
    print(f"wrote {args.out} ({result.omegas.size}/{expected} eigenfrequencies)")
    return 0


def _cmd_reconstruct(args: argparse.Namespace) -> int:
    spec = load_network(args.hidden)
    # the hidden file is only ever seen by the oracle constructor
    oracle = _make_oracle(args, spec)
    cfg = reconstruction.ReconstructConfig(
        k=args.k,
        temperature=args.temperature,
        init=parse_probe_init(args.init),
        omega_window=(args.window_min, args.window_max),
        threads=_threads(args),
    )
    report = reconstruction.reconstruct(oracle, args.n_nodes, cfg)
    payload = {
        "omegas": list(report.omegas_est),
        "k_matrix": report.k_est.tolist(),
        "a_matrix": report.a_est.tolist(),
        "diagnostics": {
            "orthogonality_residual": report.orthogonality_residual,
            "measurement_count": report.measurement_count,
            "sign_flags": [list(f) for f in report.sign_flags],
            "fallback_modes": list(report.fallback_modes),
            "suspect_rows": list(report.suspect_rows),
            "tau_f": report.tau_f,
            "tau_thermal": report.tau_thermal,
            "t_detect": report.t_detect,
            "t_magnitude": report.t_magnitude,
            "detection_nodes": list(report.detection_nodes),
        },
    }
    _atomic_write(args.out, json.dumps(payload, indent=2) + "\n")
    if args.a_csv:
        save_matrix_csv(report.a_est, args.a_csv)
    print(
        f"wrote {args.out} ({report.measurement_count} measurements, "
        f"orthogonality residual {report.orthogonality_residual:.3g})"
    )
    return 0


def _load_estimate(path: str | Path) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        data = json.loads(text)
        if "a_matrix" not in data:
            raise ValidationError(f"{path}: missing required field 'a_matrix'")
        return np.asarray(data["a_matrix"], dtype=float)
    return np.array(
        [[float(v) for v in line.split(",")] for line in text.strip().splitlines()]
    )


def _cmd_compare(args: argparse.Namespace) -> int:
    a_est = _load_estimate(args.estimate)
    truth = network.to_adjacency(load_network(args.truth))
    metrics = reconstruction.compare_adjacency(a_est, truth, link_threshold=args.threshold)
    payload = {
        "rel_frobenius": metrics.rel_frobenius,
        "link_precision": metrics.link_precision,
        "link_recall": metrics.link_recall,
        "max_diag_error": metrics.max_diag_error,
        "n_true_links": metrics.n_true_links,
        "n_est_links": metrics.n_est_links,
        "threshold": metrics.threshold,
    }
    _atomic_write(args.out, json.dumps(payload, indent=2) + "\n")
    if args.diff_csv:
        save_matrix_csv(a_est - truth.a, args.diff_csv)
    print(
        f"wrote {args.out} (recall {metrics.link_recall:.3f}, "
        f"rel. Frobenius {metrics.rel_frobenius:.3g})"
    )
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_common_probe_args(p: argparse.ArgumentParser, with_pair: bool = True) -> None:
    p.add_argument("--node", type=int, default=0, help="probed node (default 0)")
    if with_pair:
        p.add_argument("--pair", type=int, nargs=2, metavar=("A", "B"), help="probe a node pair")
    p.add_argument("--k", type=float, required=True, help="probe-network coupling strength")
    p.add_argument("--T", dest="temperature", type=float, default=0.0, help="network temperature")
    p.add_argument(
        "--init", default="vacuum", help="probe state: vacuum | squeezed:R[,PHI] | thermal:T"
    )
    p.add_argument("--noise-sigma", type=float, default=0.0, help="Gaussian readout noise sigma")
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker cap (or NETPROBE_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netprobe",
        description="Simulate, probe and reconstruct harmonic-oscillator networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a network from a topology recipe")
    p.add_argument("--recipe", required=True, choices=["chain", "periodic", "shortcut", "smallworld", "erdos"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--omega0", type=float, required=True)
    p.add_argument("--h", type=float, help="coupling (chain, shortcut, erdos)")
    p.add_argument("--h-strong", type=float, help="strong coupling (periodic)")
    p.add_argument("--h-weak", type=float, help="weak coupling (periodic)")
    p.add_argument("--period", type=int, default=3, help="weak-bond period (periodic)")
    p.add_argument("--shortcut", type=int, nargs=2, metavar=("A", "B"), help="shortcut endpoints")
    p.add_argument("--h-shortcut", type=float, help="shortcut coupling (shortcut, smallworld)")
    p.add_argument("--h-chain", type=float, help="backbone coupling (smallworld)")
    p.add_argument("--n-shortcuts", type=int, help="number of shortcuts (smallworld)")
    p.add_argument("--p-edge", type=float, help="edge probability (erdos)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--require-connected", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--adjacency-csv", help="also dump the adjacency matrix as CSV")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("spectrum", help="exact spectral density of a known network")
    p.add_argument("--network", required=True)
    p.add_argument("--node", type=int, default=0)
    p.add_argument("--pair", type=int, nargs=2, metavar=("A", "B"))
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--omega-min", type=float, required=True)
    p.add_argument("--omega-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--comb-out", help="also dump the discrete comb as CSV")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("dynamics", help="exact probe occupation time series")
    p.add_argument("--network", required=True)
    _add_common_probe_args(p)
    p.add_argument("--omega-s", type=float, required=True, help="probe frequency")
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dynamics)

    p = sub.add_parser("scan", help="estimate J(omega) from occupation readouts")
    p.add_argument("--network", required=True)
    _add_common_probe_args(p)
    p.add_argument("--t", type=float, required=True, help="interaction time")
    p.add_argument("--omega-min", type=float, required=True)
    p.add_argument("--omega-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("eigenfreqs", help="detect eigenfrequencies in the discrete regime")
    p.add_argument("--network", required=True)
    _add_common_probe_args(p)
    p.add_argument("--t", type=float, default=None, help="interaction time (default 3x recurrence)")
    p.add_argument("--expected", type=int, default=None, help="expected mode count (default n)")
    p.add_argument("--prominence-factor", type=float, default=3.0)
    p.add_argument("--omega-min", type=float, required=True)
    p.add_argument("--omega-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eigenfreqs)

    p = sub.add_parser("reconstruct", help="blindly reconstruct a hidden network")
    p.add_argument("--hidden", required=True, help="network file, seen only by the oracle")
    p.add_argument("--N", dest="n_nodes", type=int, required=True, help="known network size")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--T", dest="temperature", type=float, default=0.0)
    p.add_argument("--init", default="squeezed:1.0,1.5707963267948966")
    p.add_argument("--window-min", type=float, default=0.15, help="search window lower edge")
    p.add_argument("--window-max", type=float, default=2.0, help="search window upper edge")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--a-csv", help="also dump the estimated adjacency matrix as CSV")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("compare", help="compare an adjacency estimate against the truth")
    p.add_argument("--estimate", required=True, help="report JSON or adjacency CSV")
    p.add_argument("--truth", required=True, help="network JSON file")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--diff-csv", help="also dump the difference matrix as CSV")
    p.set_defaults(func=_cmd_compare)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse argv, dispatch, and map failures to exit codes (1 validation, 2 numerical)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _echo_config(args)
    try:
        return args.func(args)
    except NUMERICAL_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 2
    except (ValidationError, DisconnectedNetwork, FileNotFoundError) as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 1
    except NetprobeError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
