"""Experiment driver: sampling, estimation, fitting, scaling, validation.

Every run writes a manifest (the resolved flags plus versions) next to its
outputs, and all tabular output is plain CSV with a header row, so results
can be reproduced and plotted without this package. Seeds are explicit:
commands that consume randomness require --seed or a config entry.

Exit codes: 0 success, 1 failed checks, 2 I/O or format errors, 3 width
cap exceeded (the contraction would not fit in memory).
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, circuit, estimator, haar, oracle, stats, tensornet
from .circuit import Circuit, EnsembleSpec, Entangler, Family, HaarMode
from .estimator import StoreFormatError, TerminationPolicy
from .tensornet import DEFAULT_WIDTH_CAP, MemoryBoundError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_IO = 2
EXIT_MEMORY = 3

OUT_DIR_ENV = "FRAMEPOT_OUT_DIR"


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or '.')")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="framepot", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"framepot {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="sample circuit-pair traces into a store file")
    _add_common(s)
    s.add_argument("--family", choices=[f.value for f in Family])
    s.add_argument("--n", type=int)
    s.add_argument("--l", type=int)
    s.add_argument("--entangler", choices=[e.value for e in Entangler])
    s.add_argument("--haar-mode", choices=[m.value for m in HaarMode])
    s.add_argument("--seed", type=int)
    s.add_argument("--k", help="monitored k for the stopping rule (default 2)")
    s.add_argument("--min-samples", type=int)
    s.add_argument("--max-samples", type=int)
    s.add_argument("--budget-seconds", type=float)
    s.add_argument("--width-cap", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--dump-circuit", action="store_true",
                   help="also write sample 0's trace circuit as text")

    s = sub.add_parser("estimate", help="frame potentials for stored traces")
    _add_common(s)
    s.add_argument("--store", action="append", required=True)
    s.add_argument("--k", help="comma-separated k list, e.g. 1,2,3")
    s.add_argument("--replicates", type=int)
    s.add_argument("--seed", type=int)

    s = sub.add_parser("fit", help="bootstrap depth-to-epsilon estimates")
    _add_common(s)
    s.add_argument("--store", action="append", required=True)
    s.add_argument("--k", help="single k (default 2)")
    s.add_argument("--epsilon", type=float)
    s.add_argument("--replicates", type=int)
    s.add_argument("--seed", type=int)

    s = sub.add_parser("scaling", help="linear depth-vs-qubits fits from layers.csv")
    _add_common(s)
    s.add_argument("--layers", required=True, help="layers.csv produced by 'fit'")

    s = sub.add_parser("theory", help="closed-form k=2 curves")
    _add_common(s)
    s.add_argument("--k2", action="store_true", help="use the k=2 closed forms")
    s.add_argument("--n", type=int)
    s.add_argument("--l", type=int)
    s.add_argument("--n-range", help="lo:hi inclusive, e.g. 4:12")
    s.add_argument("--l-range", help="lo:hi inclusive, e.g. 1:8")
    s.add_argument("--epsilon", type=float)

    s = sub.add_parser("validate", help="oracle cross-checks and Haar sanity checks")
    _add_common(s)
    s.add_argument("--seed", type=int)
    s.add_argument("--samples", type=int, help="trace samples for the Haar check")
    s.add_argument("--width-cap", type=int)

    s = sub.add_parser("diagnose", help="per-partition frame potentials of a store")
    _add_common(s)
    s.add_argument("--store", action="append", required=True)
    s.add_argument("--k", help="single k (default 2)")
    s.add_argument("--parts", type=int)
    return p


def _load_config(path) -> dict[str, str]:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _resolve(args: argparse.Namespace, name: str, default=None, cast=None):
    """Flag value if given, else config entry, else default."""
    value = getattr(args, name, None)
    if value is None and getattr(args, "_config", None):
        value = args._config.get(name)
    if value is None:
        return default
    if cast is not None and isinstance(value, str):
        return cast(value)
    return value


def _out_dir(args) -> Path:
    out = _resolve(args, "out_dir") or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(path: Path, args, resolved: dict):
    lines = [f"subcommand={args.command}"]
    for key, value in sorted(resolved.items()):
        if value is not None:
            lines.append(f"{key}={value}")
    lines.append(f"framepot_version={__version__}")
    lines.append(f"numpy_version={np.__version__}")
    lines.append(f"python_version={sys.version.split()[0]}")
    path.write_text("\n".join(lines) + "\n")


def _require_seed(args) -> int:
    seed = _resolve(args, "seed", cast=int)
    if seed is None:
        raise SystemExit("a --seed (or config seed=) is required; no silent entropy")
    return int(seed)


def _parse_k_list(text, default=(2,)) -> tuple[int, ...]:
    if text is None:
        return tuple(default)
    return tuple(int(tok) for tok in str(text).split(","))


def _build_spec(args) -> EnsembleSpec:
    family = _resolve(args, "family")
    if family is None:
        raise SystemExit("--family is required")
    n = _resolve(args, "n", cast=int)
    l = _resolve(args, "l", cast=int)
    if n is None or l is None:
        raise SystemExit("--n and --l are required")
    ent = _resolve(args, "entangler")
    haar_mode = _resolve(args, "haar_mode", default="ginibre_qr")
    return EnsembleSpec(
        family=Family(family),
        n=int(n),
        l=int(l),
        entangler=Entangler(ent) if ent else None,
        haar_mode=HaarMode(haar_mode),
    )


def _cmd_sample(args) -> int:
    spec = _build_spec(args)
    seed = _require_seed(args)
    policy = TerminationPolicy(
        min_samples=_resolve(args, "min_samples", 1000, int),
        max_samples=_resolve(args, "max_samples", 100_000, int),
        wall_clock_budget=_resolve(args, "budget_seconds", None, float),
        monitor_k=max(_parse_k_list(_resolve(args, "k"))),
    )
    width_cap = _resolve(args, "width_cap", DEFAULT_WIDTH_CAP, int)
    workers = _resolve(args, "workers", 1, int)
    out = _out_dir(args)
    store = estimator.sample_traces(spec, policy, seed, width_cap=width_cap, workers=workers)
    store_path = out / estimator.store_filename(spec)
    estimator.save_store(store, store_path)
    _write_manifest(
        Path(f"{store_path}.manifest"), args,
        {
            "family": spec.family.value, "n": spec.n, "l": spec.l,
            "entangler": spec.entangler.value if spec.entangler else None,
            "haar_mode": spec.haar_mode.value, "seed": seed,
            "min_samples": policy.min_samples, "max_samples": policy.max_samples,
            "budget_seconds": policy.wall_clock_budget, "k": policy.monitor_k,
            "width_cap": width_cap, "workers": workers, "out_dir": out,
        },
    )
    if _resolve(args, "dump_circuit", False):
        rng = estimator.sample_rng(seed, 0)
        u = circuit.build_instance(spec, rng)
        v = circuit.build_instance(spec, rng)
        tc = circuit.build_trace_circuit(u, v)
        (out / "trace_circuit_sample0.txt").write_text(circuit.to_text(tc))
    flag = " (suspect)" if store.suspect else ""
    print(f"wrote {store_path} with {len(store)} samples{flag}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    seed = _require_seed(args)
    ks = _parse_k_list(_resolve(args, "k"))
    replicates = _resolve(args, "replicates", stats.DEFAULT_REPLICATES, int)
    out = _out_dir(args)
    rng = np.random.default_rng(seed)
    rows = []
    for path in args.store:
        store = estimator.load_store(path)
        for k in ks:
            rows.append(analysis.frame_potential_row(store, k, replicates, rng))
    csv_path = out / "frame_potential.csv"
    analysis.write_csv(csv_path, analysis.FRAME_POTENTIAL_FIELDS, rows)
    _write_manifest(
        Path(f"{csv_path}.manifest"), args,
        {"stores": ";".join(args.store), "k": ",".join(map(str, ks)),
         "replicates": replicates, "seed": seed, "out_dir": out},
    )
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return EXIT_OK


def _group_stores(paths) -> dict[tuple, dict[int, estimator.TraceSampleStore]]:
    groups: dict[tuple, dict[int, estimator.TraceSampleStore]] = {}
    for path in paths:
        store = estimator.load_store(path)
        spec = store.spec
        key = (spec.family, spec.n, spec.entangler, spec.haar_mode, spec.q)
        groups.setdefault(key, {})[spec.l] = store
    return groups


def _cmd_fit(args) -> int:
    seed = _require_seed(args)
    ks = _parse_k_list(_resolve(args, "k"))
    epsilon = _resolve(args, "epsilon", analysis.DEFAULT_EPSILON, float)
    replicates = _resolve(args, "replicates", stats.DEFAULT_REPLICATES, int)
    out = _out_dir(args)
    rng = np.random.default_rng(seed)
    rows = []
    for (family, n, _, _, _), by_l in sorted(_group_stores(args.store).items()):
        for k in ks:
            est, dist = analysis.bootstrap_layer_estimate(
                by_l, k, epsilon, replicates, rng
            )
            if len(dist):
                summary = stats.summarize(dist, (5.0, 95.0))
                p05, p95 = summary.percentiles[5.0], summary.percentiles[95.0]
            else:
                p05 = p95 = math.nan
            rows.append({
                "ensemble": family.value, "n": n, "k": k, "epsilon": epsilon,
                "layers_median": est.layers, "p05": p05, "p95": p95,
                "status": est.status,
            })
    csv_path = out / "layers.csv"
    analysis.write_csv(csv_path, analysis.LAYERS_FIELDS, rows)
    _write_manifest(
        Path(f"{csv_path}.manifest"), args,
        {"stores": ";".join(args.store), "k": ",".join(map(str, ks)),
         "epsilon": epsilon, "replicates": replicates, "seed": seed, "out_dir": out},
    )
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return EXIT_OK


def _cmd_scaling(args) -> int:
    import csv as _csv

    out = _out_dir(args)
    with open(args.layers, newline="") as fh:
        records = list(_csv.DictReader(fh))
    groups: dict[tuple, list[tuple[float, float]]] = {}
    for rec in records:
        if rec["status"] != "ok":
            continue  # missing depth estimates stay out of scaling fits
        n = float(rec["n"])
        layers = float(rec["layers_median"])
        # the local family adds one gate per layer, so depth per qubit is
        # the quantity that scales linearly with n
        y = layers / n if rec["ensemble"] == Family.LOCAL.value else layers
        groups.setdefault((rec["ensemble"], int(rec["k"])), []).append((n, y))
    rows = []
    for (ensemble, k), pairs in sorted(groups.items()):
        fit = analysis.linear_scaling_fit(pairs)
        rows.append({
            "ensemble": ensemble, "k": k, "slope": fit.slope,
            "intercept": fit.intercept, "r2": fit.r_squared,
        })
    csv_path = out / "slopes.csv"
    analysis.write_csv(csv_path, analysis.SLOPES_FIELDS, rows)
    _write_manifest(Path(f"{csv_path}.manifest"), args,
                    {"layers": args.layers, "out_dir": out})
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return EXIT_OK


def _parse_range(text) -> list[int]:
    lo, _, hi = str(text).partition(":")
    return list(range(int(lo), int(hi) + 1))


def _cmd_theory(args) -> int:
    if not _resolve(args, "k2", False):
        raise SystemExit("only the k=2 closed forms are available; pass --k2")
    out = _out_dir(args)
    epsilon = _resolve(args, "epsilon", analysis.DEFAULT_EPSILON, float)
    n_single = _resolve(args, "n", cast=int)
    l_single = _resolve(args, "l", cast=int)
    n_range = _resolve(args, "n_range")
    l_range = _resolve(args, "l_range")
    if n_single is not None and l_single is not None and not n_range and not l_range:
        print(f"{analysis.theory_bound_k2(n_single, l_single):g}")
        return EXIT_OK
    ns = _parse_range(n_range) if n_range else [n_single]
    ls = _parse_range(l_range) if l_range else ([l_single] if l_single else [])
    if any(v is None for v in ns):
        raise SystemExit("--n or --n-range is required")
    rows = []
    for n in ns:
        for l in ls:
            rows.append({
                "n": n, "l": l,
                "bound": analysis.theory_bound_k2(n, l),
                "layers": analysis.theory_layers_k2(n, epsilon=epsilon),
                "epsilon": epsilon,
            })
        if not ls:
            rows.append({
                "n": n, "l": "",
                "bound": "",
                "layers": analysis.theory_layers_k2(n, epsilon=epsilon),
                "epsilon": epsilon,
            })
    csv_path = out / "theory.csv"
    analysis.write_csv(csv_path, ["n", "l", "bound", "layers", "epsilon"], rows)
    _write_manifest(Path(f"{csv_path}.manifest"), args,
                    {"n": n_range or n_single, "l": l_range or l_single,
                     "epsilon": epsilon, "out_dir": out})
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return EXIT_OK


def _check(name: str, ok: bool, detail: str, failures: list):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if not ok:
        failures.append(name)


def _cmd_validate(args) -> int:
    seed = _resolve(args, "seed", 0, int)
    samples = _resolve(args, "samples", 100_000, int)
    width_cap = _resolve(args, "width_cap", DEFAULT_WIDTH_CAP, int)
    out = _out_dir(args)
    rng = np.random.default_rng(seed)
    failures: list[str] = []

    worst = 0.0
    for family, kwargs in (
        (Family.PARALLEL, {}),
        (Family.LOCAL, {}),
        (Family.HEA, {"entangler": Entangler.CNOT}),
        (Family.HEA, {"entangler": Entangler.CZ}),
    ):
        for _ in range(10):
            n = int(rng.integers(2, 6))
            l = int(rng.integers(1, 5))
            spec = EnsembleSpec(family, n=n, l=l, **kwargs)
            c = circuit.build_instance(spec, rng)
            net = tensornet.build_network(c, 0, 0)
            amp = tensornet.contract_amplitude(net, tensornet.order_indices(net), width_cap)
            worst = max(worst, abs(amp - oracle.dense_amplitude(c, 0, 0)))
    _check("oracle-amplitude", worst < 1e-10,
           f"40 random circuits, worst |tn - dense| = {worst:.2e}", failures)

    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 5))
        spec = EnsembleSpec(Family.PARALLEL, n=n, l=int(rng.integers(1, 4)))
        u = circuit.build_instance(spec, rng)
        v = circuit.build_instance(spec, rng)
        tc = circuit.build_trace_circuit(u, v)
        net = tensornet.build_network(tc)
        t = 2.0**n * tensornet.contract_amplitude(net, tensornet.order_indices(net), width_cap)
        ref = oracle.dense_trace(u, v)
        worst = max(worst, abs(t - ref) / max(abs(ref), 1e-30))
    _check("trace-identity", worst < 1e-9,
           f"20 random pairs, worst relative error = {worst:.2e}", failures)

    worst = 0.0
    for n in range(1, 11):
        ident = Circuit(n)
        tc = circuit.build_trace_circuit(ident, ident)
        net = tensornet.build_network(tc)
        amp = tensornet.contract_amplitude(net, tensornet.order_indices(net), width_cap)
        worst = max(worst, abs(amp - 1.0))
    _check("bell-sandwich-identity", worst < 1e-12,
           f"identity pairs n<=10, worst |amp - 1| = {worst:.2e}", failures)

    spec = EnsembleSpec(Family.PARALLEL, n=2, l=1)
    policy = TerminationPolicy(min_samples=samples, max_samples=samples, monitor_k=3)
    store = estimator.sample_traces(spec, policy, seed, width_cap=width_cap)
    for k in (1, 2, 3):
        est = estimator.frame_potential(store, k)
        bound = 3.0 * est.std_error
        ok = abs(est.value - math.factorial(k)) <= bound
        _check(f"haar-k{k}", ok,
               f"F = {est.value:.4f} vs {math.factorial(k)} +- {bound:.4f} "
               f"({samples} samples)", failures)

    c_val = analysis.theory_decay_constant()
    _check("closed-form-decay-constant", abs(c_val - 4.4814) < 1e-4,
           f"C(q=2) = {c_val:.5f}", failures)
    slope = 2.0 * c_val * math.log(2.0)
    _check("closed-form-slope", abs(slope - 6.213) < 0.01,
           f"2*C*ln2 = {slope:.4f}", failures)
    bound = analysis.theory_bound_k2(4, 2)
    _check("closed-form-bound", abs(bound - 3.28) < 1e-12,
           f"bound(n=4, l=2) = {bound!r}", failures)

    report = haar.sampler_report("phase_param", rng, min(samples, 100_000))
    print(
        f"INFO phase-mode-report: |U00|^2 KS p = {report.entry_ks_pvalue:.3g}, "
        f"single-gate F(k=1) = {report.fp_k1_value:.4f} +- {report.fp_k1_std_error:.4f} "
        f"(Haar value 1)"
    )

    _write_manifest(out / "manifest_validate.txt", args,
                    {"seed": seed, "samples": samples, "width_cap": width_cap,
                     "out_dir": out})
    if failures:
        print(f"{len(failures)} check(s) failed: {', '.join(failures)}")
        return EXIT_FAIL
    print("all checks passed")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    ks = _parse_k_list(_resolve(args, "k"))
    parts = _resolve(args, "parts", 3, int)
    out = _out_dir(args)
    rows = []
    for path in args.store:
        store = estimator.load_store(path)
        for k in ks:
            for p, est in enumerate(analysis.partition_diagnostic(store, parts, k)):
                rows.append({
                    "ensemble": store.spec.family.value, "n": store.spec.n,
                    "l": store.spec.l, "k": k, "partition": p,
                    "samples": est.sample_count, "value": est.value,
                    "std_error": est.std_error, "rel_dev": est.rel_dev,
                })
    csv_path = out / "partitions.csv"
    fields = ["ensemble", "n", "l", "k", "partition", "samples", "value",
              "std_error", "rel_dev"]
    analysis.write_csv(csv_path, fields, rows)
    _write_manifest(Path(f"{csv_path}.manifest"), args,
                    {"stores": ";".join(args.store), "k": ",".join(map(str, ks)),
                     "parts": parts, "out_dir": out})
    for row in rows:
        print(f"l={row['l']} k={row['k']} partition {row['partition']}: "
              f"F = {row['value']:.4f} (rel_dev {row['rel_dev']:+.4f})")
    print(f"wrote {csv_path}")
    return EXIT_OK


_COMMANDS = {
    "sample": _cmd_sample,
    "estimate": _cmd_estimate,
    "fit": _cmd_fit,
    "scaling": _cmd_scaling,
    "theory": _cmd_theory,
    "validate": _cmd_validate,
    "diagnose": _cmd_diagnose,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    config_path = getattr(args, "config", None)
    try:
        args._config = _load_config(config_path) if config_path else {}
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return _COMMANDS[args.command](args)
    except MemoryBoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MEMORY
    except StoreFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
