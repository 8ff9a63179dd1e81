"""Regenerate tests/golden/law_{3,4,5}.{json,txt}.

Run only after an intended change to the recursion or the rendering, then
review the diff.
"""

import argparse
import json
from pathlib import Path

from kplaws import lawgen

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def golden_json(k: int) -> str:
    payload = {"invariant": lawgen.gen_invariant(k).to_dict(), "lawset": lawgen.gen_coeffs(k).to_dict()}
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def golden_text(k: int) -> str:
    return lawgen.render_law(lawgen.gen_invariant(k)) + "\n"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orders", type=int, nargs="*", default=[3, 4, 5])
    args = ap.parse_args()
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for k in args.orders:
        (GOLDEN / f"law_{k}.json").write_text(golden_json(k))
        (GOLDEN / f"law_{k}.txt").write_text(golden_text(k))
        print(f"wrote law_{k}.json, law_{k}.txt")


if __name__ == "__main__":
    main()
