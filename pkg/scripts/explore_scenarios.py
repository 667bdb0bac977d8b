"""State-space size and timing of the table-manager scenario as burraco players are added.

    python3 scripts/explore_scenarios.py --max-players 8 --table-size 4
"""
import argparse
import json
import time
from dataclasses import asdict, dataclass

from mucows.assertions import check
from mucows.explorer import explore
from mucows.scenario import ScenarioSpec, generate, reference_assertions
from mucows.semantics import State


@dataclass
class Config:
    table_size: int = 4
    min_players: int = 1
    max_players: int = 8
    max_states: int = 100_000
    check: bool = True


def run(cfg: Config) -> list[dict]:
    rows = []
    for k in range(cfg.min_players, cfg.max_players + 1):
        spec = ScenarioSpec(cfg.table_size, tuple((f"p{i}", "burraco") for i in range(k)))
        t0 = time.perf_counter()
        lts = explore(State.initial(generate(spec).main), max_states=cfg.max_states)
        t1 = time.perf_counter()
        row = {"players": k, **lts.summary(), "explore_s": round(t1 - t0, 2)}
        if cfg.check and not lts.truncated:
            report = check(lts, reference_assertions(spec))
            row["assertions_passed"] = report.passed
            row["check_s"] = round(time.perf_counter() - t1, 2)
        rows.append(row)
        print(json.dumps(row), flush=True)
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for k, v in asdict(Config()).items():
        flag = "--" + k.replace("_", "-")
        if isinstance(v, bool):
            ap.add_argument(flag, action=argparse.BooleanOptionalAction, default=v)
        else:
            ap.add_argument(flag, type=type(v), default=v)
    run(Config(**vars(ap.parse_args())))


if __name__ == "__main__":
    main()
