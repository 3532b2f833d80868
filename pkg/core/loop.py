# core/loop.py

import csv
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from tqdm import tqdm

from core.context import ExperimentContext, RunnerProfile
from core.logger import log
from core.session import WorkerPool
from core.strategy import COLUMNS, evaluate_point, grid_points, summarize
from models import ExperimentSpec

_SER_KINDS = ("ser-vs-rho", "ser-gain-vs-power", "k1-vs-K")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ExperimentLoop:
    def __init__(
        self,
        spec: ExperimentSpec,
        out_dir: Optional[Path] = None,
        workers: Optional[int] = None,
        quiet: bool = False,
        profile: Optional[RunnerProfile] = None,
    ):
        self.context = ExperimentContext(spec, profile=profile, out_dir=out_dir, workers=workers)
        self.quiet = quiet

    @property
    def chunk_size(self) -> int:
        profile = self.context.profile
        if self.context.spec.kind in _SER_KINDS:
            return int(profile.ser_config.get("chunk_size", profile.chunk_size))
        return profile.chunk_size

    def run(self) -> Dict[str, Any]:
        ctx = self.context
        spec = ctx.spec
        points = grid_points(spec)
        seeds = ctx.point_seeds(len(points))
        log("run", f"{spec.name} ({spec.kind}): {len(points)} grid points on {ctx.workers} worker(s)")

        tasks = [(spec, point, seed, self.chunk_size) for point, seed in zip(points, seeds)]
        rows: List[Dict[str, Any]] = []
        with WorkerPool(ctx.workers) as pool:
            results = pool.map(evaluate_point, tasks)
            for point_rows in tqdm(results, total=len(tasks), desc=spec.name, disable=self.quiet):
                rows.extend(point_rows)

        self._write_csv(rows)
        summary = {
            "name": spec.name,
            "kind": spec.kind,
            "figure": spec.figure,
            "seed": spec.seed,
            "rows": len(rows),
            "csv": str(ctx.csv_path),
            "elapsed_s": round(ctx.elapsed, 3),
            "within_budget": ctx.elapsed <= spec.runtime_budget_s,
            "result": summarize(spec, rows),
            "spec": spec.model_dump(mode="json"),
        }
        ctx.summary_path.write_text(json.dumps(summary, indent=2))
        if not summary["within_budget"]:
            log("run", f"{spec.name} took {ctx.elapsed:.0f}s, over its {spec.runtime_budget_s:.0f}s budget")
        log("run", f"wrote {len(rows)} rows -> {ctx.csv_path}")
        return summary

    def _write_csv(self, rows: List[Dict[str, Any]]) -> None:
        path = self.context.csv_path
        path.parent.mkdir(parents=True, exist_ok=True)
        columns = COLUMNS[self.context.spec.kind]
        with path.open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row.get(c)) for c in columns])


def run_experiment(
    spec: ExperimentSpec, out_dir: Optional[Path] = None, workers: Optional[int] = None, quiet: bool = False
) -> Dict[str, Any]:
    return ExperimentLoop(spec, out_dir=out_dir, workers=workers, quiet=quiet).run()
