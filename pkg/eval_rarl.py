"""
Quick seed-sweep evaluation for rarl-kit.

Usage (from project root):
    # 1) Install deps (once):
    #    pip install -r requirements.txt

    # 2) Optionally set RARL_KIT_THREADS / RARL_KIT_LOG_LEVEL in .env.

    # 3) Edit EXPERIMENTS below (environment, abstraction, slacks, seeds).

    # 4) Run:
    #    python eval_rarl.py

This script:
- Runs RARL on every (experiment, seed) with the library API
- Evaluates the returned policy of options exactly against V*
- Compares escapes with the sample-complexity budget and the value loss
  with the near-optimality tolerance
- Prints per-run rows + per-experiment averages and saves rarl_results.csv
"""

from typing import Any, Dict, List

import numpy as np
import pandas as pd
from tqdm import tqdm

from rarl_kit.abstraction import value_loss_bound, value_of_options_from_start
from rarl_kit.cli import ground_optimum
from rarl_kit.envs import builtin, inflate_rewards
from rarl_kit.errors import RarlKitError
from rarl_kit.rarl import RarlConfig, realizer_complexity, run, sample_complexity_budget, tilde_values
from rarl_kit.simulator import Simulator


# -------------------------------------------------------------------
# 1) EXPERIMENTS – EDIT TO TASTE
# -------------------------------------------------------------------

EXPERIMENTS: List[Dict[str, Any]] = [
    # Exact abstraction, everything realizable: RARL should never correct.
    {"name": "chain", "env": "chain", "seeds": range(5), "episodes": 400,
     "min_visits": 1, "min_entry_samples": 1},
    # Synthesized admissible abstraction over random rooms.
    {"name": "rooms", "env": "rooms", "seeds": range(5), "episodes": 4000,
     "min_visits": 20, "min_entry_samples": 5},
    # Optimistic rewards: corrections must bring Ṽ down.
    {"name": "rooms-inflated", "env": "rooms", "inflate": True, "seeds": range(5), "episodes": 4000,
     "min_visits": 20, "min_entry_samples": 5},
    # Folded symmetric arms: the homomorphic image as abstraction.
    {"name": "mirrored-arms", "env": "mirrored-arms", "seeds": range(3), "episodes": 3000,
     "min_visits": 20, "min_entry_samples": 5},
]


# -------------------------------------------------------------------
# 2) HELPER: ONE RUN
# -------------------------------------------------------------------

def run_experiment(experiment: Dict[str, Any], seed: int) -> Dict[str, Any]:
    """
    Run RARL once and score it.

    Mirrors what `rarl-kit run` writes to meta.json, without touching disk.
    """
    fixture = builtin(experiment["env"], seed=seed)
    pair = fixture.pair()
    if experiment.get("inflate"):
        pair = fixture.pair(inflate_rewards(pair.abstract))

    config = RarlConfig(
        episodes=experiment["episodes"],
        seed=seed,
        min_visits=experiment.get("min_visits"),
        min_entry_samples=experiment.get("min_entry_samples"),
        eps_r=experiment.get("eps_r", 0.05),
        eps_t=experiment.get("eps_t", 0.05),
    )
    result = run(Simulator(pair.ground, seed=seed), pair, config)

    n_abs, m_abs = pair.abstract.num_abstract_states, pair.abstract.num_abstract_actions
    complexity = realizer_complexity(config, pair)

    optimal = ground_optimum(pair.ground)
    achieved = value_of_options_from_start(pair.ground, pair.mapping, result.omega)
    tolerance = value_loss_bound(config.eps_r, config.eps_t, pair.ground.gamma, pair.abstract.gamma_bar, n_abs) \
        + 3.0 * config.eps / (1.0 - pair.ground.gamma)
    # corrections only ever lower Ṽ
    before, after = tilde_values(pair.abstract), tilde_values(result.model)
    defined = ~np.isnan(before)
    monotone = bool(np.all(after[defined] <= before[defined] + 1e-9))

    return {
        "experiment": experiment["name"],
        "seed": seed,
        "episodes": len(result.logs),
        "hit_cap": result.hit_cap,
        "escapes": result.escapes,
        "budget": sample_complexity_budget(config, n_abs, m_abs, complexity),
        "corrections": len(result.state.corrections),
        "monotone": monotone,
        "options_value": achieved,
        "optimal_value": optimal,
        "value_loss": optimal - achieved,
        "tolerance": tolerance,
    }


# -------------------------------------------------------------------
# 3) SWEEP
# -------------------------------------------------------------------

def build_results(experiments: List[Dict[str, Any]]) -> pd.DataFrame:
    jobs = [(e, seed) for e in experiments for seed in e["seeds"]]
    rows: List[Dict[str, Any]] = []
    for experiment, seed in tqdm(jobs, desc="runs"):
        try:
            rows.append(run_experiment(experiment, seed))
        except RarlKitError as e:
            print(f"[EVAL] {experiment['name']} seed {seed} failed: {e}")
    return pd.DataFrame(rows)


# -------------------------------------------------------------------
# 4) SUMMARY
# -------------------------------------------------------------------

def summarize(df: pd.DataFrame) -> pd.DataFrame:
    df = df.assign(
        within_budget=df["escapes"] <= df["budget"],
        within_bound=df["value_loss"] <= df["tolerance"] + 1e-9,
    )
    print("\n===== RARL RESULTS – PER RUN =====")
    print(df)

    print("\n===== RARL RESULTS – PER EXPERIMENT =====")
    print(df.groupby("experiment").mean(numeric_only=True))

    try:
        df.to_csv("rarl_results.csv", index=False)
        print("\nSaved detailed results to rarl_results.csv")
    except Exception as e:
        print(f"\n[WARN] Could not save CSV: {e}")

    return df


# -------------------------------------------------------------------
# 5) MAIN
# -------------------------------------------------------------------

def main():
    if not EXPERIMENTS:
        print("No EXPERIMENTS defined. Please fill the EXPERIMENTS list first.")
        return

    print("Running RARL over EXPERIMENTS…")
    df = build_results(EXPERIMENTS)
    if df.empty:
        print("Every run failed; nothing to summarize.")
        return

    summarize(df)


if __name__ == "__main__":
    main()
