"""Parameter sweeps over (algorithm, n, p, M, B, seed) with band checks.

A sweep config is flat text: ``[algo]`` section headers followed by
``key = v1 v2 ...`` lines whose values multiply out to one scenario row
per combination.  Each row owns a private simulator, so rows are
independent and the whole sweep is deterministic given its seeds; rows
are sorted before CSV assembly, and identical configs produce
byte-identical CSV files.  The ``PEMLAB_SEED`` environment variable
overrides every configured seed list.

Each measured row records the ledger counters plus a closed-form bound
and the measured/bound ratio; band checking groups rows into series and
passes a series when max ratio / min ratio stays within the band
factor.  Bounds convert log bases explicitly (``log_M n = ln n / ln
M``), and parameter points where a bound degenerates are emitted with
``status=skipped`` and a reason instead of a number.
"""
from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass, replace

from pemlab.hull import HullStats, hull_main
from pemlab.machine import Machine, MachineConfig, MachineFault
from pemlab.primitives import KeySeq, prefix_sum
from pemlab.sorting import SortStats, sample_sort

__all__ = [
    "BandReport",
    "CSV_HEADER",
    "DEFAULT_CRIT_BAND",
    "DEFAULT_MISS_BAND",
    "ScenarioRow",
    "check_bands",
    "parse_csv",
    "parse_sweep_config",
    "rows_to_csv",
    "run_scenario",
    "run_sweep",
]

CSV_HEADER = ("algo,n,p,M,B,seed,status,ops,crit_path,cache_misses,"
              "block_misses,rounds,retries,bound,ratio")

# Acceptance-suite policy constants, not asymptotic claims: miss-ratio
# series may spread by 4x, critical-path series by 2.5x.
DEFAULT_MISS_BAND = 4.0
DEFAULT_CRIT_BAND = 2.5

BOUND_FORMULAS = {
    "sort": "(n/B) * log_M n",
    "hull": "(n/B) * log_M n",
    "prefix": "n/B",
}


@dataclass(frozen=True)
class ScenarioRow:
    """One measured (or skipped) sweep point.

    ``bound`` is the closed-form value of the algorithm's miss bound
    (see ``BOUND_FORMULAS``) and ``ratio`` is ``cache_misses / bound``;
    both are ``None`` on skipped rows, where ``status`` carries the
    reason instead.
    """

    algo: str
    n: int
    p: int
    M: int
    B: int
    seed: int
    status: str = "ok"
    ops: int | None = None
    crit_path: int | None = None
    cache_misses: int | None = None
    block_misses: int | None = None
    rounds: int | None = None
    retries: int | None = None
    bound: float | None = None
    ratio: float | None = None

    def sort_key(self):
        return (self.algo, self.n, self.p, self.M, self.B, self.seed)

    def to_csv(self) -> str:
        def cell(v):
            return "" if v is None else (repr(v) if isinstance(v, float)
                                         else str(v))

        return ",".join(cell(v) for v in (
            self.algo, self.n, self.p, self.M, self.B, self.seed,
            self.status, self.ops, self.crit_path, self.cache_misses,
            self.block_misses, self.rounds, self.retries, self.bound,
            self.ratio))


def _log_base_m(n: int, M: int) -> float:
    return math.log(n) / math.log(M)


def _miss_bound(algo: str, n: int, M: int, B: int) -> tuple:
    """Closed-form bound value, or ``(None, reason)`` when degenerate."""
    if algo in ("sort", "hull"):
        if M < 2:
            return None, "bound degenerate: log_M n needs M >= 2"
        if n < 2:
            return None, "bound degenerate: log_M n needs n >= 2"
        return (n / B) * _log_base_m(n, M), None
    return max(1.0, n / B), None


def _sort_instance(n: int, seed: int) -> list:
    rng = random.Random(seed)
    return [rng.randrange(max(1, 4 * n)) for _ in range(n)]


def _hull_instance(n: int, seed: int) -> list:
    """Random bounded half-planes with the origin strictly interior."""
    rng = random.Random(seed)
    planes = []
    for _ in range(n - 4):
        a = rng.randrange(-2000, 2001)
        b = rng.randrange(-2000, 2001)
        if a == 0 and b == 0:
            a = 1
        planes.append((a, b, rng.randrange(1, 4 * n)))
    for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        planes.append((a, b, rng.randrange(n, 2 * n)))
    return planes


def _prefix_instance(n: int, seed: int) -> list:
    rng = random.Random(seed)
    return [rng.randrange(-100, 100) for _ in range(n)]


def _load(machine: Machine, vals: list) -> KeySeq:
    region = machine.alloc(max(1, len(vals)))
    machine.load(region, vals)
    return KeySeq(region, len(vals))


def run_scenario(algo: str, n: int, p: int, M: int, B: int,
                 seed: int) -> ScenarioRow:
    """Run one sweep point on a private simulator and measure it."""
    row = ScenarioRow(algo=algo, n=n, p=p, M=M, B=B, seed=seed)
    if algo not in BOUND_FORMULAS:
        raise MachineFault(f"unknown algorithm {algo!r}")
    floor = {"sort": 1, "hull": 5, "prefix": 1}[algo]
    if n < floor:
        return replace(row, status=f"skipped({algo} needs n >= {floor})")
    bound, reason = _miss_bound(algo, n, M, B)
    if bound is None:
        return replace(row, status=f"skipped({reason})")
    try:
        machine = Machine(MachineConfig(p=p, M=M, B=B, seed=seed))
    except MachineFault as exc:
        return replace(row, status=f"skipped({exc})".replace(",", ";"))
    retries = 0
    if algo == "sort":
        stats = SortStats()
        sample_sort(machine, _load(machine, _sort_instance(n, seed)),
                    machine.cores, stats=stats, stream=seed)
        retries = stats.resamples
    elif algo == "hull":
        stats = HullStats()
        hull_main(machine, _load(machine, _hull_instance(n, seed)),
                  machine.cores, stats=stats, stream=seed)
        retries = stats.repolls
    else:
        prefix_sum(machine, _load(machine, _prefix_instance(n, seed)),
                   machine.cores)
    led = machine.ledger()
    return replace(
        row,
        ops=led.ops,
        crit_path=led.critical_path,
        cache_misses=led.cache_misses,
        block_misses=led.block_misses,
        rounds=led.rounds,
        retries=retries,
        bound=bound,
        ratio=led.cache_misses / bound,
    )


# ------------------------------------------------------------------ sweeps


_SWEEP_KEYS = ("n", "p", "M", "B", "seed")
_SWEEP_DEFAULTS = {"p": [1], "M": [1024], "B": [8], "seed": [0]}


def parse_sweep_config(text: str) -> list:
    """Parse the flat sweep format into ``(algo, {key: [ints]})`` pairs.

    Sections are ``[algo]`` lines; each following ``key = v1 v2 ...``
    line lists the values that key sweeps over.  ``n`` is required per
    section; ``p``, ``M``, ``B``, ``seed`` default to single values.
    """
    sections: list = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            algo = line[1:-1].strip()
            if algo not in BOUND_FORMULAS:
                raise MachineFault(f"unknown algorithm section {algo!r}")
            current = (algo, {})
            sections.append(current)
            continue
        if current is None:
            raise MachineFault(f"line {lineno} precedes any [algo] section")
        if "=" not in line:
            raise MachineFault(f"bad sweep line {lineno}: {raw!r}")
        key, vals = (part.strip() for part in line.split("=", 1))
        if key not in _SWEEP_KEYS:
            raise MachineFault(f"unknown sweep key {key!r} on line {lineno}")
        try:
            current[1][key] = [int(v) for v in vals.split()]
        except ValueError:
            raise MachineFault(
                f"non-integer value on line {lineno}: {raw!r}") from None
    for algo, keys in sections:
        if "n" not in keys or not keys["n"]:
            raise MachineFault(f"section [{algo}] lists no n values")
    return sections


def run_sweep(config_text: str, env=None) -> list:
    """Run every scenario of a sweep config; returns sorted rows.

    ``PEMLAB_SEED`` in the environment replaces every seed list.
    """
    env = os.environ if env is None else env
    override = env.get("PEMLAB_SEED")
    rows = []
    for algo, keys in parse_sweep_config(config_text):
        grids = {k: list(keys.get(k, _SWEEP_DEFAULTS.get(k, []))) for k in _SWEEP_KEYS}
        if override is not None:
            grids["seed"] = [int(override)]
        for n in grids["n"]:
            for p in grids["p"]:
                for M in grids["M"]:
                    for B in grids["B"]:
                        for seed in grids["seed"]:
                            rows.append(run_scenario(algo, n, p, M, B, seed))
    rows.sort(key=ScenarioRow.sort_key)
    return rows


def rows_to_csv(rows) -> str:
    return "\n".join([CSV_HEADER] + [r.to_csv() for r in rows]) + "\n"


def parse_csv(text: str) -> list:
    """Parse a sweep CSV back into :class:`ScenarioRow` values."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise MachineFault("CSV header does not match the sweep schema")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 15:
            raise MachineFault(f"malformed CSV row: {ln!r}")

        def num(i, cast):
            return cast(cells[i]) if cells[i] else None

        rows.append(ScenarioRow(
            algo=cells[0], n=int(cells[1]), p=int(cells[2]), M=int(cells[3]),
            B=int(cells[4]), seed=int(cells[5]), status=cells[6],
            ops=num(7, int), crit_path=num(8, int), cache_misses=num(9, int),
            block_misses=num(10, int), rounds=num(11, int),
            retries=num(12, int), bound=num(13, float), ratio=num(14, float)))
    return rows


# ------------------------------------------------------------- band checks


@dataclass(frozen=True)
class SeriesResult:
    key: tuple
    count: int
    spread: float | None
    status: str  # pass | fail | inconclusive


@dataclass(frozen=True)
class BandReport:
    band: float
    metric: str
    series: tuple

    @property
    def passed(self) -> bool:
        return all(s.status != "fail" for s in self.series)

    def format(self) -> str:
        lines = []
        for s in self.series:
            label = " ".join(f"{k}={v}" for k, v in s.key)
            if s.status == "inconclusive":
                lines.append(f"{label}: {s.count} row(s), inconclusive")
            else:
                lines.append(f"{label}: spread {s.spread:.4f} vs band "
                             f"{self.band:g} -> {s.status}")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"band check ({self.metric}): {verdict}")
        return "\n".join(lines)


def check_bands(rows, band: float | None = None,
                metric: str = "miss") -> BandReport:
    """Group measured rows into series and bound each series' spread.

    ``miss`` series fix (algo, p, M, B) and follow the ratio column as n
    varies; ``crit`` series fix (algo, n, M, B) and follow critical path
    normalized by the ideal (n/p) log2 n shape as p varies.  A series
    passes when max/min stays within ``band``; series with fewer than
    two measured rows are inconclusive.
    """
    if metric not in ("miss", "crit"):
        raise MachineFault(f"unknown band metric {metric!r}")
    if band is None:
        band = DEFAULT_MISS_BAND if metric == "miss" else DEFAULT_CRIT_BAND
    series: dict = {}
    for row in rows:
        if row.status != "ok":
            continue
        if metric == "miss":
            key = (("algo", row.algo), ("p", row.p), ("M", row.M),
                   ("B", row.B))
            value = row.ratio
        else:
            if row.n < 2 or row.crit_path is None:
                continue
            key = (("algo", row.algo), ("n", row.n), ("M", row.M),
                   ("B", row.B))
            value = row.crit_path / ((row.n / row.p) * math.log2(row.n))
        series.setdefault(key, []).append(value)
    results = []
    for key in sorted(series):
        vals = series[key]
        if len(vals) < 2:
            results.append(SeriesResult(key, len(vals), None, "inconclusive"))
            continue
        spread = max(vals) / min(vals)
        results.append(SeriesResult(
            key, len(vals), spread,
            "pass" if spread <= band else "fail"))
    return BandReport(band=band, metric=metric, series=tuple(results))
