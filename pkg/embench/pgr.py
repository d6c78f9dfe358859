"""Performance Gain Ratio: an embedding's gain over a random baseline,
relative to the best embedding's gain on the same task.

    PGR(a, b) = (p_a - p_rand) / (p_b - p_rand) * 100

An embedding "wins" a task when its PGR reaches WIN_THRESHOLD.
"""

from dataclasses import dataclass, field

from .errors import DataError

WIN_THRESHOLD = 95.0


def pgr(p_a: float, p_b: float, p_rand: float) -> float:
    """Gain ratio in percent; negative when `p_a` is below the baseline.

    Raises DataError unless the best result `p_b` beats the baseline.
    """
    if p_b <= p_rand:
        raise DataError(
            f"degenerate baseline: best result {p_b:.4g} does not beat the random baseline {p_rand:.4g}"
        )
    return (p_a - p_rand) / (p_b - p_rand) * 100.0


@dataclass(frozen=True)
class PgrCell:
    p_a: float
    p_rand: float
    p_b: float
    value: float

    @property
    def win(self) -> bool:
        return self.value >= WIN_THRESHOLD


@dataclass
class PgrReport:
    """PGR cells keyed by (embedding, task), in declared order."""

    embeddings: list[str]
    tasks: list[str]
    cells: dict[tuple[str, str], PgrCell] = field(default_factory=dict)

    def cell(self, embedding: str, task: str) -> PgrCell | None:
        return self.cells.get((embedding, task))

    def wins_for_task(self, task: str) -> int:
        return sum(1 for (_, t), c in self.cells.items() if t == task and c.win)

    def wins_for_embedding(self, embedding: str) -> int:
        return sum(1 for (e, _), c in self.cells.items() if e == embedding and c.win)

    def render(self) -> str:
        """Tab-separated matrix, cells 'PGR% (p_a)', plus win counts."""
        lines = ["\t".join(["embedding", *self.tasks, "wins"])]
        for name in self.embeddings:
            row = [name]
            for task in self.tasks:
                c = self.cell(name, task)
                row.append("-" if c is None else f"{c.value:.2f}% ({c.p_a:.4g})")
            row.append(str(self.wins_for_embedding(name)))
            lines.append("\t".join(row))
        totals = [str(self.wins_for_task(t)) for t in self.tasks]
        lines.append("\t".join(["wins", *totals, str(sum(c.win for c in self.cells.values()))]))
        return "\n".join(lines) + "\n"


def build_pgr_report(
    results: dict[str, dict[str, float]],
    baselines: dict[str, float],
) -> PgrReport:
    """PGR of every (embedding, task) against the per-task best.

    Args:
        results: metric per task, per embedding name
        baselines: random-embedding metric per task

    Returns:
        PgrReport in the insertion order of `results` and `baselines`
    """
    tasks = list(baselines)
    report = PgrReport(embeddings=list(results), tasks=tasks)
    for task in tasks:
        scores = {name: metrics[task] for name, metrics in results.items() if task in metrics}
        if not scores:
            raise DataError(f"no embedding has a result for task {task}")
        best = max(scores.values())
        for name, p_a in scores.items():
            report.cells[(name, task)] = PgrCell(
                p_a=p_a, p_rand=baselines[task], p_b=best, value=pgr(p_a, best, baselines[task])
            )
    return report
