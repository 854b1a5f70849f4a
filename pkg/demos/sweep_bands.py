"""Drive a benchmark sweep and its asymptotic band check end to end.

Builds a small sweep config (same flat text format the ``pemlab sweep``
command reads), runs it twice to show the CSV is byte-stable, then runs
the miss-ratio band check that gates the sweep: for each (algo, p, M, B)
series the max/min spread of cache_misses / bound must stay under the
band.
"""
from pemlab.bench import check_bands, parse_csv, rows_to_csv, run_sweep

CONFIG = """\
[sort]
n = 4096 8192 16384 32768
p = 4
M = 4096
B = 64
seed = 9

[hull]
n = 1024 2048 4096
p = 4
M = 4096
B = 64
seed = 9

[prefix]
n = 65536
p = 8
M = 1024
B = 16
seed = 0
"""


def main():
    rows = run_sweep(CONFIG)
    csv_text = rows_to_csv(rows)
    print("== sweep CSV ==")
    print(csv_text, end="")

    again = rows_to_csv(run_sweep(CONFIG))
    print(f"\nre-run byte-identical: {csv_text == again}")

    report = check_bands(parse_csv(csv_text), band=4.0, metric="miss")
    print("\n== miss-ratio band check (band 4.0) ==")
    print(report.format())


if __name__ == "__main__":
    main()
