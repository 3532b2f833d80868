# core/strategy.py -> per-kind experiment evaluators
# Role: expands a spec's sweep into grid points and evaluates one grid point
# at a time, so the loop can fan points out over a worker pool.
#
# Responsibilities:
# - AXES: which sweep lists form the grid of each kind, in row order
# - evaluate_point(): top-level, picklable entry used by the worker pool
# - summarize(): argmax / argmin / gains reported in the summary JSON
#
# Dependencies: modules/mi.py, modules/optimize.py, modules/modem.py

import itertools
import math
from collections import defaultdict
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np

from core.errors import ContractViolation, DomainError
from core.session import spawn_seeds
from models import EstimatorKnobs, ExperimentSpec, LinkBudget, SplitConfig
from modules.channel import compute_theta, identical_gain_channel, sample_channel_iid_rayleigh
from modules.mi import (
    asymptotic_mi_gain,
    joint_processing_gain_mi,
    mi_high_snr_approx,
    mi_vs_rho,
)
from modules.modem import (
    asymptotic_ser_gain,
    make_constellation,
    ser_conventional,
    ser_gain_high_snr,
    ser_high_snr,
    ser_joint_processing_gain,
    ser_monte_carlo,
)
from modules.optimize import (
    average_partition_ratio,
    best_simplified_partition,
    partition_config,
    simplified_mi_large_k,
    solve_p1,
)

Point = Dict[str, Any]
Row = Dict[str, Any]

_MI_AXES = ("k", "power", "sigma1_sq", "sigma2_sq")

AXES: Dict[str, Tuple[str, ...]] = {
    "mi-vs-rho": _MI_AXES + ("rho",),
    "mi-approx-vs-rho": _MI_AXES + ("rho",),
    "opt-rho-vs-power": ("k", "sigma1_sq", "sigma2_sq", "power"),
    "mi-vs-power": ("k", "sigma1_sq", "sigma2_sq", "power"),
    "gain-vs-power": ("k", "sigma1_sq", "sigma2_sq", "power"),
    "mi-vs-K": ("power", "sigma1_sq", "sigma2_sq", "k"),
    "partition-vs-K": ("k",),
    "ser-vs-rho": ("scheme", "m", "k", "power", "sigma1_sq", "sigma2_sq", "rho"),
    "ser-gain-vs-power": ("scheme", "m", "k", "sigma1_sq", "sigma2_sq", "power"),
    "k1-vs-K": ("scheme", "m", "power", "sigma1_sq", "sigma2_sq", "k"),
}

COLUMNS: Dict[str, Tuple[str, ...]] = {
    "mi-vs-rho": AXES["mi-vs-rho"] + ("mi_bits", "std_err", "samples", "bins", "seed"),
    "mi-approx-vs-rho": AXES["mi-approx-vs-rho"] + ("mi_mc", "std_err", "mi_ei", "mi_log", "seed"),
    "opt-rho-vs-power": AXES["opt-rho-vs-power"] + ("opt_rho_mc", "opt_mi_mc", "opt_rho_ei", "opt_mi_ei", "seed"),
    "mi-vs-power": AXES["mi-vs-power"] + ("rho", "mi_split", "std_err", "mi_coherent", "mi_noncoherent", "seed"),
    "gain-vs-power": AXES["gain-vs-power"] + ("gain_ei", "argmax_rho_ei", "gain_log", "gain_asymptotic"),
    "mi-vs-K": AXES["mi-vs-K"] + ("realizations", "mi_optimal", "mi_simplified", "mi_uniform", "mi_large_k", "seed"),
    "partition-vs-K": AXES["partition-vs-K"] + ("realizations", "mean_k1_ratio", "std_k1_ratio", "mean_k1_ratio_sorted", "seed"),
    "ser-vs-rho": AXES["ser-vs-rho"] + ("trials", "errors", "ser", "ci95", "ser_high_snr", "seed"),
    "ser-gain-vs-power": AXES["ser-gain-vs-power"]
    + ("gain_formula", "gain_asymptotic", "gain_mc", "argmin_rho_mc", "needs_more_trials", "seed"),
    "k1-vs-K": AXES["k1-vs-K"] + ("k1", "trials", "errors", "ser", "ci95", "ser_approx", "seed"),
}


def grid_points(spec: ExperimentSpec) -> List[Point]:
    axes = AXES[spec.kind]
    values = [getattr(spec.sweep, axis) for axis in axes]
    return [dict(zip(axes, combo)) for combo in itertools.product(*values)]


def _budget(p: Point) -> LinkBudget:
    return LinkBudget(power=p["power"], sigma1_sq=p["sigma1_sq"], sigma2_sq=p["sigma2_sq"])


def _interior(rho: float) -> bool:
    return 0.0 < rho < 1.0


def _or_inf(value: Any) -> float:
    return math.inf if value is None else value


# MI evaluators

def _mi_vs_rho(p: Point, spec: ExperimentSpec, knobs: EstimatorKnobs, seed: int, chunk: int) -> List[Row]:
    ch, lb = identical_gain_channel(p["k"]), _budget(p)
    estimator = knobs.estimator
    (_, bits, err), = mi_vs_rho(
        ch, lb, [p["rho"]], estimator=estimator, samples=knobs.samples, bins=knobs.bins,
        batches=knobs.batches, seed=seed, chunk_size=chunk, quadrature_tol=knobs.quadrature_tol,
    )
    return [{**p, "mi_bits": bits, "std_err": err, "samples": knobs.samples, "bins": knobs.bins, "seed": seed}]


def _mi_approx_vs_rho(p: Point, spec: ExperimentSpec, knobs: EstimatorKnobs, seed: int, chunk: int) -> List[Row]:
    ch, lb = identical_gain_channel(p["k"]), _budget(p)
    (_, mc, err), = mi_vs_rho(
        ch, lb, [p["rho"]], estimator="mc", samples=knobs.samples, bins=knobs.bins,
        batches=knobs.batches, seed=seed, chunk_size=chunk, quadrature_tol=knobs.quadrature_tol,
    )
    row = {**p, "mi_mc": mc, "std_err": err, "mi_ei": None, "mi_log": None, "seed": seed}
    if _interior(p["rho"]):
        cfg = SplitConfig.uniform(p["k"], p["rho"])
        row["mi_ei"] = mi_high_snr_approx(ch, cfg, lb, "ei")
        row["mi_log"] = mi_high_snr_approx(ch, cfg, lb, "log")
    return [row]


def _opt_rho_vs_power(p: Point, spec: ExperimentSpec, knobs: EstimatorKnobs, seed: int, chunk: int) -> List[Row]:
    ch, lb = identical_gain_channel(p["k"]), _budget(p)
    grid = spec.sweep.rho
    mc_rows = mi_vs_rho(
        ch, lb, grid, estimator="mc", samples=knobs.samples, bins=knobs.bins,
        batches=knobs.batches, seed=seed, chunk_size=chunk, quadrature_tol=knobs.quadrature_tol,
    )
    best_mc = max(mc_rows, key=lambda r: r[1])
    interior = [r for r in grid if _interior(r)]
    row = {**p, "opt_rho_mc": best_mc[0].rho[0], "opt_mi_mc": best_mc[1], "opt_rho_ei": None, "opt_mi_ei": None,
           "seed": seed}
    if interior:
        ei = [mi_high_snr_approx(ch, SplitConfig.uniform(p["k"], r), lb, "ei") for r in interior]
        best = int(np.argmax(ei))
        row["opt_rho_ei"], row["opt_mi_ei"] = interior[best], ei[best]
    return [row]


def _mi_vs_power(p: Point, spec: ExperimentSpec, knobs: EstimatorKnobs, seed: int, chunk: int) -> List[Row]:
    ch, lb = identical_gain_channel(p["k"]), _budget(p)
    rho = spec.sweep.rho[0]
    noncoherent = "exact" if knobs.estimator == "mc" else "bound"
    rows = mi_vs_rho(
        ch, lb, [rho, 1.0, 0.0], estimator=knobs.estimator, noncoherent=noncoherent,
        samples=knobs.samples, bins=knobs.bins, batches=knobs.batches, seed=seed, chunk_size=chunk,
        quadrature_tol=knobs.quadrature_tol,
    )
    (_, split, err), (_, coherent, _), (_, power_only, _) = rows
    return [{**p, "rho": rho, "mi_split": split, "std_err": err, "mi_coherent": coherent,
             "mi_noncoherent": power_only, "seed": seed}]


def _gain_vs_power(p: Point, spec: ExperimentSpec, knobs: EstimatorKnobs, seed: int, chunk: int) -> List[Row]:
    ch, lb = identical_gain_channel(p["k"]), _budget(p)
    ei = joint_processing_gain_mi(ch, lb, spec.sweep.rho, estimator="formula", form="ei")
    log_form = joint_processing_gain_mi(ch, lb, spec.sweep.rho, estimator="formula", form="log")
    return [{**p, "gain_ei": ei.gain, "argmax_rho_ei": ei.argmax_rho.rho[0], "gain_log": log_form.gain,
             "gain_asymptotic": asymptotic_mi_gain()}]


def _mi_vs_k(p: Point, spec: ExperimentSpec, knobs: EstimatorKnobs, seed: int, chunk: int) -> List[Row]:
    k, lb = p["k"], _budget(p)
    form = knobs.estimator if knobs.estimator in ("ei", "log") else "ei"
    optimal, simplified, uniform = [], [], []
    for s in spawn_seeds(seed, knobs.realizations):
        ch = sample_channel_iid_rayleigh(k, s)
        sol = solve_p1(ch, resolution=knobs.resolution, restarts=knobs.restarts, seed=s)
        optimal.append(mi_high_snr_approx(ch, sol.rho, lb, form))
        uniform.append(mi_high_snr_approx(ch, SplitConfig.uniform(k, 1.0 / 3.0), lb, form))
        if k >= 2:
            # the simplified receiver on Rayleigh gains uses its best K1 under the given ordering
            part = best_simplified_partition(ch)
            simplified.append(mi_high_snr_approx(ch, partition_config(ch, part.k1), lb, form))
    return [{
        **p,
        "realizations": knobs.realizations,
        "mi_optimal": float(np.mean(optimal)),
        "mi_simplified": float(np.mean(simplified)) if simplified else None,
        "mi_uniform": float(np.mean(uniform)),
        "mi_large_k": simplified_mi_large_k(lb, k, (1.0, 2.0)),
        "seed": seed,
    }]


def _partition_vs_k(p: Point, spec: ExperimentSpec, knobs: EstimatorKnobs, seed: int, chunk: int) -> List[Row]:
    mean, std = average_partition_ratio(p["k"], knobs.realizations, seed)
    mean_sorted, _ = average_partition_ratio(p["k"], knobs.realizations, seed, ordering="sorted_by_gain")
    return [{**p, "realizations": knobs.realizations, "mean_k1_ratio": mean, "std_k1_ratio": std,
             "mean_k1_ratio_sorted": mean_sorted, "seed": seed}]


# SER evaluators

def _ser_vs_rho(p: Point, spec: ExperimentSpec, knobs: EstimatorKnobs, seed: int, chunk: int) -> List[Row]:
    c = make_constellation(p["scheme"], p["m"])
    ch, lb = identical_gain_channel(p["k"]), _budget(p)
    cfg = SplitConfig.uniform(p["k"], p["rho"])
    res = ser_monte_carlo(c, ch, cfg, lb, knobs.trials, seed, chunk_size=chunk)
    approx = None
    try:
        approx = ser_high_snr(c, compute_theta(ch, cfg), lb)
    except DomainError:
        pass
    return [{**p, "trials": res.trials, "errors": res.errors, "ser": res.ser, "ci95": res.ci95_halfwidth,
             "ser_high_snr": approx, "seed": seed}]


def _ser_gain_vs_power(p: Point, spec: ExperimentSpec, knobs: EstimatorKnobs, seed: int, chunk: int) -> List[Row]:
    c = make_constellation(p["scheme"], p["m"])
    ch, lb = identical_gain_channel(p["k"]), _budget(p)
    try:
        formula = ser_gain_high_snr(c, ch, lb)
    except DomainError:
        formula = None
    mc = ser_joint_processing_gain(c, ch, lb, spec.sweep.rho, knobs.trials, seed)
    return [{**p, "gain_formula": formula, "gain_asymptotic": asymptotic_ser_gain(c), "gain_mc": mc.gain,
             "argmin_rho_mc": mc.argmin_rho.rho[0] if mc.argmin_rho else None,
             "needs_more_trials": mc.needs_more_trials, "seed": seed}]


def _k1_vs_k(p: Point, spec: ExperimentSpec, knobs: EstimatorKnobs, seed: int, chunk: int) -> List[Row]:
    c = make_constellation(p["scheme"], p["m"])
    k = p["k"]
    ch, lb = identical_gain_channel(k), _budget(p)
    rows = []
    for k1, s in zip(range(k + 1), spawn_seeds(seed, k + 1)):
        cfg = SplitConfig.binary(k, k1)
        res = ser_monte_carlo(c, ch, cfg, lb, knobs.trials, s, chunk_size=chunk)
        if k1 == k:
            approx = ser_conventional(c, ch, lb, "coherent")
        elif k1 == 0:
            approx = ser_conventional(c, ch, lb, "noncoherent")
        else:
            approx = ser_high_snr(c, compute_theta(ch, cfg), lb)
        rows.append({**p, "k1": k1, "trials": res.trials, "errors": res.errors, "ser": res.ser,
                     "ci95": res.ci95_halfwidth, "ser_approx": approx, "seed": s})
    return rows


EVALUATORS: Dict[str, Callable[..., List[Row]]] = {
    "mi-vs-rho": _mi_vs_rho,
    "mi-approx-vs-rho": _mi_approx_vs_rho,
    "opt-rho-vs-power": _opt_rho_vs_power,
    "mi-vs-power": _mi_vs_power,
    "gain-vs-power": _gain_vs_power,
    "mi-vs-K": _mi_vs_k,
    "partition-vs-K": _partition_vs_k,
    "ser-vs-rho": _ser_vs_rho,
    "ser-gain-vs-power": _ser_gain_vs_power,
    "k1-vs-K": _k1_vs_k,
}


def evaluate_point(task: Tuple[ExperimentSpec, Point, int, int]) -> List[Row]:
    """Worker-pool entry: (spec, point, seed, chunk_size) -> rows for that point."""
    spec, point, seed, chunk = task
    try:
        evaluator = EVALUATORS[spec.kind]
    except KeyError:
        raise ContractViolation(f"no evaluator for experiment kind {spec.kind!r}")
    return evaluator(point, spec, spec.knobs, seed, chunk)


# Summaries

def _group(rows: Sequence[Row], keys: Sequence[str]) -> Dict[tuple, List[Row]]:
    groups: Dict[tuple, List[Row]] = defaultdict(list)
    for row in rows:
        groups[tuple(row[k] for k in keys)].append(row)
    return groups


def _finite(value: Any) -> bool:
    return value is not None and isinstance(value, (int, float)) and math.isfinite(value)


def _summarize_mi_rho(rows: Sequence[Row], value: str) -> List[Dict[str, Any]]:
    out = []
    for key, group in _group(rows, _MI_AXES).items():
        best = max(group, key=lambda r: r[value])
        ends = [r[value] for r in group if not _interior(r["rho"])]
        entry = dict(zip(_MI_AXES, key))
        entry.update(argmax_rho=best["rho"], best_bits=best[value], interior_max=_interior(best["rho"]))
        if ends and max(ends) > 0.0:
            entry["gain"] = best[value] / max(ends)
        out.append(entry)
    return out


def summarize(spec: ExperimentSpec, rows: Sequence[Row]) -> Dict[str, Any]:
    kind = spec.kind
    if kind == "mi-vs-rho":
        return {"groups": _summarize_mi_rho(rows, "mi_bits")}
    if kind == "mi-approx-vs-rho":
        groups = _summarize_mi_rho(rows, "mi_mc")
        for entry, (_, group) in zip(groups, _group(rows, _MI_AXES).items()):
            diffs = [abs(r["mi_mc"] - r["mi_ei"]) for r in group if _finite(r["mi_ei"])]
            entry["max_abs_mc_minus_ei"] = max(diffs) if diffs else None
        return {"groups": groups}
    if kind == "opt-rho-vs-power":
        return {"optimal_rho": [{"power": r["power"], "mc": r["opt_rho_mc"], "ei": r["opt_rho_ei"]} for r in rows]}
    if kind == "mi-vs-power":
        return {"gain_at_rho": [
            {"power": r["power"], "sigma2_sq": r["sigma2_sq"],
             "gain": r["mi_split"] / max(r["mi_coherent"], r["mi_noncoherent"])}
            for r in rows if max(r["mi_coherent"], r["mi_noncoherent"]) > 0.0
        ]}
    if kind == "gain-vs-power":
        return {"asymptote": asymptotic_mi_gain(),
                "gains": [{"power": r["power"], "gain_ei": r["gain_ei"], "argmax_rho": r["argmax_rho_ei"]} for r in rows]}
    if kind == "mi-vs-K":
        return {"rows": [{"k": r["k"], "power": r["power"], "optimal_minus_simplified":
                          r["mi_optimal"] - r["mi_simplified"] if _finite(r["mi_simplified"]) else None} for r in rows]}
    if kind == "partition-vs-K":
        return {"mean_k1_ratio": {str(r["k"]): r["mean_k1_ratio"] for r in rows}}
    if kind == "ser-vs-rho":
        keys = ("scheme", "m", "k", "power", "sigma1_sq", "sigma2_sq")
        out = []
        for key, group in _group(rows, keys).items():
            # equal measured SER (typically zero errors) falls back to the high-SNR approximation
            best = min(group, key=lambda r: (r["ser"], _or_inf(r["ser_high_snr"])))
            ties = sum(1 for r in group if r["ser"] == best["ser"])
            out.append({**dict(zip(keys, key)), "argmin_rho": best["rho"], "min_ser": best["ser"],
                        "interior_min": _interior(best["rho"]), "tied_rows": ties})
        return {"groups": out}
    if kind == "ser-gain-vs-power":
        return {"gains": [{k: r[k] for k in ("scheme", "m", "power", "sigma2_sq", "gain_formula", "gain_mc",
                                             "gain_asymptotic")} for r in rows]}
    if kind == "k1-vs-K":
        keys = ("scheme", "m", "power", "sigma1_sq", "sigma2_sq", "k")
        out = []
        for key, group in _group(rows, keys).items():
            # MC SER first, high-SNR approximation breaks ties (typically zero measured errors)
            best = min(group, key=lambda r: (r["ser"], r["ser_approx"], r["k1"]))
            out.append({**dict(zip(keys, key)), "k1_star": best["k1"], "ser": best["ser"]})
        return {"groups": out}
    raise ContractViolation(f"no summary for experiment kind {kind!r}")
