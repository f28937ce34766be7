"""Run every invariant battery and print the full reports.

Same as `nnstokes verify all`, kept as a script so the batteries are easy
to run under a profiler or with a custom seed.

    python3 demos/verify_all.py [seed]
"""

import sys

from nnstokes import BATTERIES, run_battery

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
failed = []
for name in sorted(BATTERIES):
    result = run_battery(name, seed=seed)
    print(result.report())
    print()
    if not result.passed:
        failed.append(name)

if failed:
    print("FAILED:", ", ".join(failed))
    sys.exit(4)
print("all batteries passed")
