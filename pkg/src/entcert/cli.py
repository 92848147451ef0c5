"""Batch command-line front end.

Subcommands run seeded experiments and persist machine-readable reports:
CSV for tabular scans (header row, ``.`` decimal separator, UTF-8, LF), JSONL
for per-run records.  Every output embeds the resolved run configuration as
``# key=value`` header lines (CSV) or a leading config record (JSONL), so a
saved file documents how to reproduce itself.  Outputs carry no timestamps:
re-running the same configuration and seed yields byte-identical files.

Exit codes: 0 success, 2 usage or configuration error, 3 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import classical_models as cm
from . import protocol_sim as ps
from .hilbert import (
    DensityOperator,
    HermitianOperator,
    InvariantViolation,
    TensorStructure,
    density,
    covariance_bilinear,
    conditional_covariance,
    lift_local,
    position_operator,
    pure_state_density,
    variance,
)
from .inequalities import CHSHConfig, chsh_value, maximize_chsh, planar_spin_setting, torre_spin_covariance
from .rng import derive_seed
from .states import negativity, singlet, to_density, werner, ConvexSumState
from .stat_tests import simple_random_sample_audit


class UsageError(Exception):
    """Bad flags, bad config values, or malformed input files."""


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, config: dict, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}={_fmt(v)}" for k, v in sorted(config.items())]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_jsonl(path: Path, config: dict, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    out = [json.dumps({"record": "config", **config}, sort_keys=True)]
    out.extend(json.dumps(r, sort_keys=True) for r in records)
    path.write_text("\n".join(out) + "\n", encoding="utf-8", newline="\n")


def _load_config_file(path: str) -> dict:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge CLI flags over config-file values over built-in defaults."""
    file_values = _load_config_file(args.config) if getattr(args, "config", None) else {}
    resolved = {}
    for key, default in defaults.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
        elif key in file_values:
            raw = file_values[key]
            try:
                if isinstance(default, bool):
                    resolved[key] = raw.lower() in ("1", "true", "yes")
                elif isinstance(default, int):
                    resolved[key] = int(raw)
                elif isinstance(default, float):
                    resolved[key] = float(raw)
                else:
                    resolved[key] = raw
            except ValueError as exc:
                raise UsageError(f"config key {key}: cannot parse {raw!r}") from exc
        else:
            resolved[key] = default
    unknown = set(file_values) - set(defaults)
    if unknown:
        raise UsageError(f"config keys not understood by this subcommand: {sorted(unknown)}")
    return resolved


def _parse_state(spec: str) -> DensityOperator:
    if spec == "singlet":
        return singlet()
    if spec == "mixed-demo":
        return density(np.diag([0.5, 0.0, 0.0, 0.5]).astype(complex), (2, 2))
    if spec.startswith("werner:"):
        try:
            w = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise UsageError(f"bad Werner parameter in {spec!r}") from exc
        try:
            return werner(w)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if spec.startswith("convex:"):
        path = spec.split(":", 1)[1]
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
            terms = tuple(
                (
                    float(term["weight"]),
                    density(np.asarray(term["left"], dtype=float), (2,)),
                    density(np.asarray(term["right"], dtype=float), (2,)),
                )
                for term in payload["terms"]
            )
            return to_density(ConvexSumState(terms))
        except OSError as exc:
            raise UsageError(f"cannot read state file {path}: {exc}") from exc
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise UsageError(f"malformed convex-sum state file {path}: {exc}") from exc
    raise UsageError(
        f"unknown state spec {spec!r}; use singlet, werner:<w in [0,1]>, "
        "mixed-demo, or convex:<json file>"
    )


def cmd_chsh(args: argparse.Namespace) -> int:
    opts = _resolve(
        args,
        {
            "state": "singlet",
            "optimize": False,
            "angles": "0,90,45,135",
            "grid_step": 1.0,
            "out": "chsh.csv",
        },
    )
    rho = _parse_state(opts["state"])
    if opts["grid_step"] <= 0:
        raise UsageError("--grid-step must be positive degrees")
    step = math.radians(opts["grid_step"])

    if opts["optimize"]:
        cfg, s_grid = maximize_chsh(rho, grid_step=step)
        report = chsh_value(rho, cfg)
    else:
        try:
            degs = [float(v) for v in opts["angles"].split(",")]
        except ValueError as exc:
            raise UsageError(f"bad --angles {opts['angles']!r}") from exc
        if len(degs) != 4:
            raise UsageError("--angles needs four comma-separated degrees: a,a',b,b'")
        cfg = CHSHConfig(*(planar_spin_setting(math.radians(d)) for d in degs))
        report = chsh_value(rho, cfg)
    if report.tsirelson_exceeded:
        raise InvariantViolation(f"CHSH S = {report.s_value} exceeds the Tsirelson ceiling")

    neg = negativity(rho)
    out = Path(opts["out"])
    _write_csv(
        out,
        opts,
        ["quantity", "value"],
        [
            ["s_value", report.s_value],
            ["e_ab", report.e_ab],
            ["e_ab_prime", report.e_ab_prime],
            ["e_a_prime_b", report.e_a_prime_b],
            ["e_a_prime_b_prime", report.e_a_prime_b_prime],
            ["classical_bound_violated", report.classical_bound_violated],
            ["tsirelson_exceeded", report.tsirelson_exceeded],
            ["negativity", neg],
        ],
    )

    # one-parameter diagonal family (0, 2t, t, 3t); peaks at the canonical settings
    scan_rows = []
    for k in range(int(90.0 / opts["grid_step"]) + 1):
        deg = k * opts["grid_step"]
        rad = math.radians(deg)
        c = CHSHConfig(
            planar_spin_setting(0.0),
            planar_spin_setting(2 * rad),
            planar_spin_setting(rad),
            planar_spin_setting(3 * rad),
        )
        scan_rows.append([deg, chsh_value(rho, c).s_value])
    _write_csv(out.with_suffix(".scan.csv"), opts, ["theta_deg", "s_value"], scan_rows)
    return 0


def cmd_dice(args: argparse.Namespace) -> int:
    opts = _resolve(args, {"trials": 10**6, "runs": 1, "seed": 0, "out": "dice.csv"})
    if opts["trials"] < 1:
        raise UsageError("--trials must be at least 1")
    if opts["runs"] < 1:
        raise UsageError("--runs must be at least 1")
    ensemble = cm.paper_dice_ensemble()
    moments = cm.analytic_moments(ensemble)
    sems = cm.analytic_sems(ensemble, opts["trials"])
    rows = [
        ["analytic", "e_a", moments.e_a, float(moments.e_a), ""],
        ["analytic", "e_b", moments.e_b, float(moments.e_b), ""],
        ["analytic", "e_ab", moments.e_ab, float(moments.e_ab), ""],
        ["analytic", "cov", moments.covariance, float(moments.covariance), ""],
    ]
    for run in range(opts["runs"]):
        seed = derive_seed(opts["seed"], run)
        draws = cm.sample(ensemble, opts["trials"], seed)
        a = draws[:, 0].astype(float)
        b = draws[:, 1].astype(float)
        mean_a, mean_b = a.mean(), b.mean()
        mean_ab = float((a * b).mean())
        cov = mean_ab - mean_a * mean_b
        rows.extend(
            [
                [f"mc_run_{run}", "e_a", "", mean_a, sems.sem_a],
                [f"mc_run_{run}", "e_b", "", mean_b, sems.sem_b],
                [f"mc_run_{run}", "e_ab", "", mean_ab, sems.sem_ab],
                [f"mc_run_{run}", "cov", "", cov, sems.sem_cov],
            ]
        )
    _write_csv(Path(opts["out"]), opts, ["block", "quantity", "exact", "value", "sem"], rows)
    return 0


def _diagonal_state(weights: np.ndarray) -> DensityOperator:
    return density(np.diag(weights / weights.sum()).astype(complex), (weights.size,))


def cmd_torre(args: argparse.Namespace) -> int:
    opts = _resolve(args, {"levels": 8, "out": "torre.csv"})
    d = opts["levels"]
    if d < 2:
        raise UsageError("--levels must be at least 2")
    x_local = position_operator(d)
    structure = TensorStructure((d, d))
    x1 = lift_local(x_local, 0, structure)
    x2 = lift_local(x_local, 1, structure)
    a_sum = HermitianOperator(x1.matrix + x2.matrix)
    b_diff = HermitianOperator(x1.matrix - x2.matrix)

    rows = []
    # asymmetric marginals: covariance equals the variance difference
    rho_asym = density(
        np.kron(
            _diagonal_state(np.arange(1.0, d + 1.0)).matrix,
            _diagonal_state(np.ones(d)).matrix,
        ),
        (d, d),
    )
    cov = covariance_bilinear(rho_asym, 1.0, 1.0, 1.0, -1.0, x1, x2)
    var1 = variance(rho_asym, x1)
    var2 = variance(rho_asym, x2)
    rows.append(["position_asymmetric", cov, var1, var2, abs(cov - (var1 - var2)), ""])

    # symmetric marginals: the combination decorrelates exactly
    rho_sym = density(
        np.kron(_diagonal_state(np.ones(d)).matrix, _diagonal_state(np.ones(d)).matrix),
        (d, d),
    )
    cov_sym = covariance_bilinear(rho_sym, 1.0, 1.0, 1.0, -1.0, x1, x2)
    rows.append(["position_symmetric", cov_sym, variance(rho_sym, x1), variance(rho_sym, x2), abs(cov_sym), ""])

    # plain local pair on a product state: conditional covariance vanishes
    rows.append(
        ["position_local_pair", conditional_covariance(rho_asym, x1, x2), var1, var2, "", ""]
    )

    # spin demo: squared total-spin observables on a tilted product state
    tilt = math.pi / 8
    qubit = np.array([math.cos(tilt), math.sin(tilt)])
    rho_spin = pure_state_density(np.kron(qubit, qubit), (2, 2))
    spin = torre_spin_covariance(rho_spin)
    rows.append(["spin_tilted_pi8", spin.covariance, "", "", "", spin.commutator_norm])

    _write_csv(
        Path(opts["out"]),
        opts,
        ["case", "covariance", "var_a", "var_b", "identity_residual", "commutator_norm"],
        rows,
    )
    return 0


def _load_model(spec: str) -> ps.SignalModel:
    if spec == "loophole-default":
        return ps.default_loophole_model()
    try:
        payload = json.loads(Path(spec).read_text(encoding="utf-8"))
        return ps.SignalModel(
            p1=np.asarray(payload["p1"], dtype=float),
            p2=np.asarray(payload["p2"], dtype=float),
            outcome=np.asarray(payload["outcome"], dtype=float),
        )
    except OSError as exc:
        raise UsageError(f"cannot read model file {spec}: {exc}") from exc
    except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed model file {spec}: {exc}") from exc


def cmd_protocol(args: argparse.Namespace) -> int:
    opts = _resolve(
        args,
        {
            "model": "loophole-default",
            "variant": "blockm",
            "n1": 4,
            "n2": 2500,
            "runs": 100,
            "seed": 0,
            "bins": 100,
            "alpha": 0.05,
            "workers": 1,
            "out": "protocol",
        },
    )
    model = _load_model(opts["model"])
    try:
        variant = ps.Variant(opts["variant"])
    except ValueError as exc:
        raise UsageError(f"unknown variant {opts['variant']!r}; use iid, blockm, or blockn") from exc
    try:
        protocol = ps.ProtocolSpec(variant=variant, n1=opts["n1"], n2=opts["n2"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if opts["runs"] < 1:
        raise UsageError("--runs must be at least 1")
    if opts["workers"] < 1:
        raise UsageError("--workers must be at least 1")

    def one_run(run: int):
        seed = derive_seed(opts["seed"], run)
        sample = ps.generate(model, protocol, seed)
        return seed, sample, ps.test_h0(sample, model)

    if opts["workers"] == 1:
        results = [one_run(r) for r in range(opts["runs"])]
    else:
        with ThreadPoolExecutor(max_workers=opts["workers"]) as pool:
            results = list(pool.map(one_run, range(opts["runs"])))

    records = []
    for run, (seed, _, rep) in enumerate(results):
        records.append(
            {
                "run": run,
                "seed": seed,
                "sample_mean": rep.sample_mean,
                "theoretical_mean": rep.theoretical_mean,
                "ratio": None if math.isnan(rep.ratio) else rep.ratio,
                "naive_sem": rep.naive_sem,
                "z_score": rep.z_score,
                "h0_rejected": {str(a): bool(flag) for a, flag in rep.h0_rejected_at},
            }
        )
    base = Path(opts["out"])
    _write_jsonl(base.with_suffix(".runs.jsonl"), opts, records)

    samples = [s for _, s, _ in results]
    rows = []
    if len(samples) >= 30:
        deff = ps.design_effect(samples)
        rows.append(["design_effect", deff, "", ""])
        rows.append(["predicted_design_effect", ps.predicted_design_effect(model, protocol), "", ""])
    pooled = np.concatenate([s.outcomes for s in samples])
    audit = simple_random_sample_audit(pooled, bin_count=opts["bins"], alpha=opts["alpha"])
    for entry in audit.entries:
        rows.append(
            [f"audit_{entry.name}", entry.statistic, "" if entry.dof is None else entry.dof, entry.p_value]
        )
    rows.append(["audit_overall_homogeneous", audit.overall_homogeneous, "", ""])
    _write_csv(base.with_suffix(".summary.csv"), opts, ["quantity", "value", "dof", "p_value"], rows)
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    opts = _resolve(args, {"file": None, "bins": 100, "alpha": 0.05, "out": "audit.csv"})
    if not opts["file"]:
        raise UsageError("audit requires --file with one numeric outcome per line")
    try:
        text = Path(opts["file"]).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read outcome file: {exc}") from exc
    values = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise UsageError(f"{opts['file']}:{lineno}: not a number: {line!r}") from exc
    if not values:
        raise UsageError(f"{opts['file']} contains no outcomes")
    try:
        report = simple_random_sample_audit(
            np.array(values), bin_count=opts["bins"], alpha=opts["alpha"]
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = [
        [e.name, e.statistic, "" if e.dof is None else e.dof, e.p_value]
        for e in report.entries
    ]
    rows.append(["overall_homogeneous", report.overall_homogeneous, "", report.bonferroni_alpha])
    _write_csv(Path(opts["out"]), opts, ["test", "statistic", "dof", "p_value"], rows)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entcert",
        description="Seeded entanglement-certification experiments with reproducible reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None, help="64-bit master seed")
        p.add_argument("--out", type=str, default=None, help="output path (or prefix)")
        p.add_argument("--config", type=str, default=None, help="key=value config file")

    p = sub.add_parser("chsh", help="CHSH value and angle scan for a named state")
    add_common(p)
    p.add_argument("--state", type=str, default=None, help="singlet | werner:<w> | mixed-demo")
    p.add_argument("--optimize", action="store_true", default=None, help="grid-maximize settings")
    p.add_argument("--angles", type=str, default=None, help="four angles in degrees: a,a',b,b'")
    p.add_argument("--grid-step", dest="grid_step", type=float, default=None, help="scan step in degrees")
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("dice", help="exact dice-pair moments and Monte Carlo estimates")
    add_common(p)
    p.add_argument("--trials", type=int, default=None, help="rolls per run")
    p.add_argument("--runs", type=int, default=None, help="number of seeded runs")
    p.set_defaults(func=cmd_dice)

    p = sub.add_parser("torre", help="covariance bilinearity demonstrations")
    add_common(p)
    p.add_argument("--levels", type=int, default=None, help="position truncation levels")
    p.set_defaults(func=cmd_torre)

    p = sub.add_parser("protocol", help="blocked-sampling significance experiments")
    add_common(p)
    p.add_argument("--model", type=str, default=None, help="loophole-default or JSON model file")
    p.add_argument("--variant", type=str, default=None, help="iid | blockm | blockn")
    p.add_argument("--n1", type=int, default=None, help="block count")
    p.add_argument("--n2", type=int, default=None, help="block length")
    p.add_argument("--runs", type=int, default=None, help="number of seeded runs")
    p.add_argument("--bins", type=int, default=None, help="bins for the pooled audit")
    p.add_argument("--alpha", type=float, default=None, help="audit significance level")
    p.add_argument("--workers", type=int, default=None, help="concurrent runs")
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("audit", help="homogeneity battery on an outcome file")
    add_common(p)
    p.add_argument("--file", type=str, default=None, help="text file, one outcome per line")
    p.add_argument("--bins", type=int, default=None, help="contiguous bins")
    p.add_argument("--alpha", type=float, default=None, help="significance level")
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
