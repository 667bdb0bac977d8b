"""Seeded random runs of a many-player scenario; tallies tables and table identifiers.

Every run should end with floor(k/T) tables per game, each identifier
delivered to exactly T distinct players.
"""
import argparse
import json
from collections import Counter
from dataclasses import asdict, dataclass

from mucows.explorer import random_run
from mucows.scenario import ScenarioSpec, generate
from mucows.semantics import State


@dataclass
class Config:
    table_size: int = 4
    players: int = 16
    games: int = 2
    runs: int = 100
    seed: int = 0
    max_steps: int = 10_000


def run(cfg: Config) -> dict:
    players = tuple((f"p{i}", f"g{i % cfg.games}") for i in range(cfg.players))
    spec = ScenarioSpec(cfg.table_size, players)
    per_game = Counter(g for _, g in players)
    want_tables = sum(n // cfg.table_size for n in per_game.values())
    s0 = State.initial(generate(spec).main)
    bad, lengths = 0, Counter()
    for r in range(cfg.runs):
        tr = random_run(s0, cfg.seed + r, cfg.max_steps)
        groups: dict = {}
        for real in tr.realized:
            if real.endpoint[1].ident.display == "start":
                groups.setdefault(real.payload[0], []).append(real.endpoint[0].ident.display)
        ok = (tr.stuck and len(groups) == want_tables
              and all(len(g) == len(set(g)) == cfg.table_size for g in groups.values()))
        bad += not ok
        lengths[len(tr.steps)] += 1
    return {"config": asdict(cfg), "expected_tables": want_tables, "bad_runs": bad,
            "run_lengths": dict(sorted(lengths.items()))}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for k, v in asdict(Config()).items():
        ap.add_argument("--" + k.replace("_", "-"), type=type(v), default=v)
    print(json.dumps(run(Config(**vars(ap.parse_args()))), indent=2))


if __name__ == "__main__":
    main()
