"""
Command-line front end for rarl-kit.

This module handles:
- verify: realizability / admissibility / homomorphism / bisimulation checks
  of an abstraction, with per-tuple CSV reports.
- realize: exact (LP) or online realization of one abstract tuple.
- run: RARL over one seed or a seed range, with per-episode CSVs, the final
  options, the corrected abstraction and meta.json.
- report: aggregate a run directory into summary CSVs.

Exit codes: 0 ok, 1 other error, 2 parse / invalid input, 3 infeasible or a
failed check, 4 episode cap reached.
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import orjson
import pandas as pd
import typer
from pydantic import BaseModel, Field, ValidationError, field_validator
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from tqdm import tqdm

from . import __version__
from .abstraction import (
    AbstractionPair,
    Mapping,
    PolicyOfOptions,
    check_admissible,
    check_bisimulation,
    check_homomorphism,
    find_realizing_option,
    homomorphism_relation,
    value_loss_bound,
    value_of_options_from_start,
)
from .config import LOG_LEVEL, worker_count
from .envfiles import load_abstraction, load_env, save_abstraction, save_options
from .envs import BUILTINS, Fixture, builtin, inflate_rewards, synthesize_admissible_abstraction
from .errors import EnumerationCapError, ParseError, RarlKitError, RealizationInfeasibleError
from .mdp import (
    GroundMdp,
    evaluate_policy,
    identity_abstract_model,
    start_value,
    value_iteration,
    vi_iterations,
)
from .rarl import RarlConfig, realizer_complexity, realizer_confidence, run, sample_complexity_budget
from .realizer import online_realizer_for, realization_problem_for, realize_exact, screen_tuple
from .simulator import Simulator

logger = logging.getLogger(__name__)
console = Console(stderr=True)

app = typer.Typer(add_completion=False, no_args_is_help=True,
                  help="Realizable abstractions: verification, realization and RARL runs.")

EXIT_OK, EXIT_OTHER, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_CAP = 0, 1, 2, 3, 4
KNOWN_CHECKS = ("realizable", "admissible", "homomorphism", "bisimulation")
ABSTRACTION_BUILTINS = ("default", "identity", "synthesized", "inflated")

# ---------------------------------------------------------------------------
# CONFIG
# ---------------------------------------------------------------------------


class RunConfig(BaseModel):
    """Validated options shared by every command."""

    command: Literal["verify", "realize", "run", "report"]
    env: str = "corridor"
    abstraction: str = "default"
    eps_r: float = Field(0.05, ge=0.0, le=1.0)
    eps_t: float = Field(0.05, ge=0.0, le=1.0)
    eta: float = Field(0.05, ge=0.0, le=1.0)
    lam: float = Field(0.05, ge=0.0, le=1.0)
    eps: float = Field(0.05, gt=0.0, lt=1.0)
    delta: float = Field(0.1, gt=0.0, lt=1.0)
    seed: int = 0
    seeds: Optional[Tuple[int, int]] = None
    episodes: int = Field(1000, ge=1)
    out: Path = Path("rarl-out")
    online: bool = False
    checks: List[str] = Field(default_factory=lambda: ["realizable", "admissible"])
    min_visits: Optional[int] = Field(None, ge=1)
    min_entry_samples: Optional[int] = Field(None, ge=1)

    @field_validator("env")
    @classmethod
    def env_exists(cls, value: str) -> str:
        if value not in BUILTINS and not Path(value).is_file():
            raise ValueError(f"{value!r} is neither a builtin environment nor a file")
        return value

    @field_validator("abstraction")
    @classmethod
    def abstraction_exists(cls, value: str) -> str:
        if value not in ABSTRACTION_BUILTINS and not Path(value).is_file():
            raise ValueError(f"{value!r} is neither a builtin abstraction nor a file")
        return value

    @field_validator("checks")
    @classmethod
    def checks_known(cls, value: List[str]) -> List[str]:
        unknown = [c for c in value if c not in KNOWN_CHECKS]
        if unknown:
            raise ValueError(f"unknown checks {unknown}; choose from {list(KNOWN_CHECKS)}")
        return value

    def rarl_config(self, seed: int) -> RarlConfig:
        return RarlConfig(
            eps_r=self.eps_r, eps_t=self.eps_t, eta=self.eta, lam=self.lam, eps=self.eps, delta=self.delta,
            episodes=self.episodes, seed=seed, min_visits=self.min_visits,
            min_entry_samples=self.min_entry_samples,
        )

    def seed_list(self) -> List[int]:
        if self.seeds is None:
            return [self.seed]
        first, last = self.seeds
        return list(range(first, last + 1))


def parse_seed_range(text: Optional[str]) -> Optional[Tuple[int, int]]:
    """'a..b' → (a, b)."""
    if text is None:
        return None
    first, sep, last = text.partition("..")
    try:
        if not sep:
            raise ValueError
        a, b = int(first), int(last)
    except ValueError:
        raise typer.BadParameter(f"seed range must look like a..b, got {text!r}") from None
    if b < a:
        raise typer.BadParameter("seed range is empty")
    return a, b


def parse_tuple(text: str) -> Tuple[int, int, int]:
    parts = text.replace(" ", "").split(",")
    try:
        previous, abstract_state, action = (int(p) for p in parts)
    except ValueError:
        raise typer.BadParameter(f"tuple must look like p,s,a, got {text!r}") from None
    return previous, abstract_state, action


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


# ---------------------------------------------------------------------------
# LOADING
# ---------------------------------------------------------------------------


def load_fixture(config: RunConfig, seed: Optional[int] = None) -> Fixture:
    """Environment plus mapping and abstract model, from builtins or files."""
    seed = config.seed if seed is None else seed
    if config.env in BUILTINS:
        fixture = builtin(config.env, seed=seed)
    else:
        ground = load_env(config.env)
        fixture = Fixture(Path(config.env).stem, ground, Mapping.identity(ground.num_states),
                          identity_abstract_model(ground))

    choice = config.abstraction
    if choice == "identity":
        fixture.mapping = Mapping.identity(fixture.ground.num_states)
        fixture.abstract = identity_abstract_model(fixture.ground)
    elif choice == "synthesized":
        fixture.abstract = synthesize_admissible_abstraction(fixture.ground, fixture.mapping, fixture.ground.gamma)
    elif choice == "inflated":
        fixture.abstract = inflate_rewards(fixture.pair().abstract)
    elif choice != "default":
        fixture.abstract, fixture.mapping = load_abstraction(choice, fixture.ground)
    logger.info("[CLI] loaded %s: %d states, %d abstract states", fixture.name,
                fixture.ground.num_states, fixture.mapping.num_abstract_states)
    return fixture


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.12g")


# ---------------------------------------------------------------------------
# VERIFY
# ---------------------------------------------------------------------------


def verify_realizable(pair: AbstractionPair, eps_r: float, eps_t: float) -> Tuple[bool, pd.DataFrame]:
    rows = []
    for tuple_ in pair.applicable_tuples():
        try:
            report = find_realizing_option(pair, tuple_, eps_r, eps_t)
            method = "enumeration"
        except EnumerationCapError:
            report = screen_tuple(pair, tuple_, eps_r, eps_t)
            method = "lp"
        row = report.row()
        row["method"] = method
        rows.append(row)
    frame = pd.DataFrame(rows)
    holds = bool(len(frame) == 0 or (frame["verdict"].all() and frame["decided"].all()))
    return holds, frame


def cmd_verify(config: RunConfig) -> int:
    fixture = load_fixture(config)
    pair = fixture.pair()
    verdicts = []
    out = config.out

    if "realizable" in config.checks:
        holds, frame = verify_realizable(pair, config.eps_r, config.eps_t)
        _write_csv(frame, out / "realizability.csv")
        failed = frame[~frame["verdict"]] if len(frame) else frame
        witness = None
        if len(failed):
            worst = failed.iloc[0]
            entry = "?" if pd.isna(worst["worst_entry"]) else int(worst["worst_entry"])
            witness = f"tuple ({worst['previous']},{worst['abstract_state']},{worst['action']}) entry {entry}"
        verdicts.append(("realizable", holds, "" if holds else "gap", witness))

    if "admissible" in config.checks:
        report = check_admissible(pair)
        rows = [{"previous": p.previous, "abstract_state": p.abstract_state, "status": p.status} for p in report.pairs]
        _write_csv(pd.DataFrame(rows), out / "admissibility.csv")
        verdicts.append(("admissible", report.admissible, report.status, None))

    if "homomorphism" in config.checks or "bisimulation" in config.checks:
        ground = fixture.ground
        first_order = pair.abstract.is_first_order(tol=1e-12)
        same_actions = pair.abstract.num_abstract_actions == ground.num_actions
        if "homomorphism" in config.checks:
            if first_order and same_actions:
                maps = np.tile(np.arange(ground.num_actions), (ground.num_states, 1))
                result = check_homomorphism(ground, pair.abstract, pair.mapping, maps)
                verdicts.append(("homomorphism", result.holds, result.reason, result.witness))
            else:
                verdicts.append(("homomorphism", False, "not-first-order" if not first_order else "action-count", None))
        if "bisimulation" in config.checks:
            if first_order and same_actions:
                result = check_bisimulation(ground, pair.abstract.first_order_view(), homomorphism_relation(pair.mapping))
                verdicts.append(("bisimulation", result.holds, result.reason, result.witness))
            else:
                verdicts.append(("bisimulation", False, "not-first-order" if not first_order else "action-count", None))

    frame = pd.DataFrame(verdicts, columns=["check", "holds", "reason", "witness"])
    frame["witness"] = frame["witness"].map(lambda w: "" if w is None else str(w))
    _write_csv(frame, out / "verdicts.csv")

    table = Table(title=f"verify {fixture.name}")
    for column in frame.columns:
        table.add_column(column)
    for row in frame.itertuples(index=False):
        table.add_row(*(str(v) for v in row))
    console.print(table)
    return EXIT_OK if bool(frame["holds"].all()) else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# REALIZE
# ---------------------------------------------------------------------------


def _entry_distribution(pair: AbstractionPair, tuple_: Tuple[int, int, int], entry: Optional[int]) -> np.ndarray:
    entries = pair.entries(tuple_[0], tuple_[1])
    if entries.size == 0:
        raise RarlKitError(f"pair {tuple_[:2]} has no entries")
    nu = np.zeros(pair.ground.num_states)
    if entry is None:
        nu[entries] = 1.0 / entries.size
    elif entry in set(entries.tolist()):
        nu[entry] = 1.0
    else:
        raise RarlKitError(f"state {entry} is not an entry of pair {tuple_[:2]}")
    return nu


def resolve_entry(fixture: Fixture, entry: Optional[str]) -> Optional[int]:
    """A ground state index or one of the fixture's state labels."""
    if entry is None:
        return None
    if entry in fixture.labels:
        return fixture.labels[entry]
    try:
        return int(entry)
    except ValueError:
        raise RarlKitError(f"unknown entry {entry!r}; labels are {sorted(fixture.labels)}") from None


def cmd_realize(config: RunConfig, tuple_: Tuple[int, int, int], entry: Optional[str] = None) -> int:
    fixture = load_fixture(config)
    pair = fixture.pair()
    nu = _entry_distribution(pair, tuple_, resolve_entry(fixture, entry))

    if config.online:
        delta_i = realizer_confidence(config.rarl_config(config.seed), pair.abstract.num_abstract_states,
                                      pair.abstract.num_abstract_actions)
        realizer = online_realizer_for(pair, tuple_, eps_r=config.eps_r, eps_t=config.eps_t, eta=config.eta,
                                       lam=config.lam, min_visits=config.min_visits,
                                       min_entry_samples=config.min_entry_samples, delta_i=delta_i)
        simulator = Simulator(pair.ground.with_start(nu), seed=config.seed)
        for _ in range(config.episodes):
            realizer.rollout_control(simulator, simulator.reset())
            if realizer.enough():
                break
        else:
            logger.error("[CLI] online realizer needs more than %d episodes", config.episodes)
            return EXIT_CAP
        result = realizer.get()
        logger.info("[CLI] online realization used %d entries", len(realizer.entry_log))
    else:
        problem = realization_problem_for(pair, tuple_, nu, config.eps_r, config.eps_t, config.eta, config.lam)
        result = realize_exact(problem)

    omega = PolicyOfOptions()
    omega.set(result.option)
    config.out.mkdir(parents=True, exist_ok=True)
    save_options(omega, config.out / "option.txt")
    h_targets = realization_problem_for(pair, tuple_, nu).h_targets
    rows = [{"target": t, "h_tilde": float(h_targets[t]), "slack": s} for t, s in sorted(result.certificate.items())]
    _write_csv(pd.DataFrame(rows, columns=["target", "h_tilde", "slack"]), config.out / "certificate.csv")
    console.print(f"tuple {tuple_}: value {result.value:.6g}, value gap {result.value_gap:.6g}, "
                  f"min slack {result.min_slack:.6g}, stochastic={result.stochastic}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# RUN
# ---------------------------------------------------------------------------


def ground_optimum(mdp: GroundMdp) -> float:
    """V*_{ν₀} by value iteration run to 1e-10 and exact evaluation of its greedy policy."""
    _, policy = value_iteration(mdp, vi_iterations(mdp.gamma, 1e-10))
    return start_value(mdp, evaluate_policy(mdp, policy))


def run_seed(payload: Dict, seed: int) -> Dict:
    """One RARL run; writes <out>/seed-<seed>/ and returns its meta record."""
    config = RunConfig(**payload)
    fixture = load_fixture(config, seed)
    pair = fixture.pair()
    rarl_config = config.rarl_config(seed)
    simulator = Simulator(pair.ground, seed=seed)
    result = run(simulator, pair, rarl_config)

    out = config.out / f"seed-{seed}"
    frame = pd.DataFrame(
        [
            {
                "episode": log.episode,
                "return": log.discounted_return,
                "escape": int(log.escape),
                "known_tuples": log.known_tuples,
                "updates": log.updates,
                "abstract_value": log.abstract_value,
                "seconds": log.seconds,
            }
            for log in result.logs
        ],
        columns=["episode", "return", "escape", "known_tuples", "updates", "abstract_value", "seconds"],
    )
    _write_csv(frame, out / "episodes.csv")
    corrections = pd.DataFrame(
        [{"episode": c.episode, "previous": c.tuple[0], "abstract_state": c.tuple[1], "action": c.tuple[2],
          "value_before": c.value_before, "value_after": c.value_after} for c in result.state.corrections],
        columns=["episode", "previous", "abstract_state", "action", "value_before", "value_after"],
    )
    _write_csv(corrections, out / "corrections.csv")
    save_options(result.omega, out / "options.txt")
    save_abstraction(result.model, pair.mapping, out / "abstraction.txt")

    complexity = realizer_complexity(rarl_config, pair)
    n_abs, m_abs = pair.abstract.num_abstract_states, pair.abstract.num_abstract_actions
    meta = {
        "version": __version__,
        "env": fixture.name,
        "seed": seed,
        "config": rarl_config.model_dump(),
        "num_abstract_states": n_abs,
        "num_abstract_actions": m_abs,
        "gamma": pair.ground.gamma,
        "gamma_bar": pair.abstract.gamma_bar,
        "realizer_complexity": complexity,
        "budget": sample_complexity_budget(rarl_config, n_abs, m_abs, complexity),
        "escapes": result.escapes,
        "episodes_run": len(result.logs),
        "hit_cap": result.hit_cap,
        "vi_iterations": result.vi_iterations,
        "escape_horizon": result.escape_horizon,
        "corrections": len(result.state.corrections),
        "relaxed_tuples": len(result.state.relaxed),
        "options_value": value_of_options_from_start(pair.ground, pair.mapping, result.omega),
        "optimal_value": ground_optimum(pair.ground),
        "value_loss_bound": value_loss_bound(rarl_config.eps_r, rarl_config.eps_t, pair.ground.gamma,
                                             pair.abstract.gamma_bar, n_abs),
    }
    (out / "meta.json").write_bytes(orjson.dumps(meta, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    return meta


def cmd_run(config: RunConfig) -> int:
    seeds = config.seed_list()
    payload = config.model_dump(mode="json")
    metas: List[Dict] = []
    if len(seeds) == 1:
        metas.append(run_seed(payload, seeds[0]))
    else:
        workers = worker_count(len(seeds))
        logger.info("[CLI] %d seeds on %d workers", len(seeds), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_seed, payload, seed) for seed in seeds]
            for future in tqdm(as_completed(futures), total=len(futures), desc="seeds"):
                metas.append(future.result())
    capped = [m["seed"] for m in metas if m["hit_cap"]]
    for meta in sorted(metas, key=lambda m: m["seed"]):
        console.print(f"seed {meta['seed']}: {meta['episodes_run']} episodes, {meta['escapes']} escapes, "
                      f"V^Ω={meta['options_value']:.4f}, V*={meta['optimal_value']:.4f}")
    if capped:
        logger.warning("[CLI] episode cap reached for seeds %s; partial outputs kept", capped)
        return EXIT_CAP
    return EXIT_OK


# ---------------------------------------------------------------------------
# REPORT
# ---------------------------------------------------------------------------


def cmd_report(run_dir: Path) -> int:
    metas = sorted((orjson.loads(p.read_bytes()) for p in run_dir.glob("seed-*/meta.json")), key=lambda m: m["seed"])
    if not metas:
        raise RarlKitError(f"no runs found under {run_dir}")

    rows, returns = [], []
    for meta in metas:
        episodes = pd.read_csv(run_dir / f"seed-{meta['seed']}" / "episodes.csv")
        eps = meta["config"]["eps"]
        tolerance = meta["value_loss_bound"] + 3.0 * eps / (1.0 - meta["gamma"])
        loss = meta["optimal_value"] - meta["options_value"]
        rows.append({
            "seed": meta["seed"],
            "episodes": int(len(episodes)),
            "escapes": int(episodes["escape"].sum()),
            "budget": meta["budget"],
            "within_budget": bool(episodes["escape"].sum() <= meta["budget"]),
            "options_value": meta["options_value"],
            "optimal_value": meta["optimal_value"],
            "value_loss": loss,
            "tolerance": tolerance,
            "within_bound": bool(loss <= tolerance + 1e-9),
            "hit_cap": meta["hit_cap"],
        })
        returns.append(episodes[["episode", "return"]].assign(seed=meta["seed"]))

    summary = pd.DataFrame(rows)
    _write_csv(summary, run_dir / "summary.csv")
    _write_csv(pd.concat(returns, ignore_index=True)[["seed", "episode", "return"]], run_dir / "returns.csv")

    table = Table(title=f"report {run_dir}")
    for column in ("seed", "episodes", "escapes", "budget", "value_loss", "within_bound"):
        table.add_column(column)
    for row in rows:
        table.add_row(str(row["seed"]), str(row["episodes"]), str(row["escapes"]), f"{row['budget']:.3g}",
                      f"{row['value_loss']:.4f}", str(row["within_bound"]))
    console.print(table)
    return EXIT_OK


# ---------------------------------------------------------------------------
# TYPER COMMANDS
# ---------------------------------------------------------------------------


def _dispatch(action, *args) -> None:
    """Run a command and translate errors into exit codes."""
    try:
        code = action(*args)
    except ParseError as exc:
        console.print(f"[red]parse error:[/red] {exc}")
        raise typer.Exit(EXIT_PARSE)
    except RealizationInfeasibleError as exc:
        console.print(f"[red]infeasible:[/red] {exc} (max gap {exc.max_gap:.6g})")
        raise typer.Exit(EXIT_INFEASIBLE)
    except RarlKitError as exc:
        console.print(f"[red]error:[/red] {exc}")
        raise typer.Exit(EXIT_OTHER)
    raise typer.Exit(code)


def _config(command: str, log_level: Optional[str], **values) -> RunConfig:
    setup_logging(log_level or LOG_LEVEL)
    try:
        return RunConfig(command=command, **values)
    except ValidationError as exc:
        console.print(f"[red]invalid options:[/red] {exc}")
        raise typer.Exit(EXIT_PARSE)


EnvOpt = typer.Option("corridor", "--env", help="Builtin name or environment file.")
AbsOpt = typer.Option("default", "--abs", help="default | identity | synthesized | inflated | abstraction file.")
LogOpt = typer.Option(None, "--log-level", help="Logging level (defaults to RARL_KIT_LOG_LEVEL).")


@app.command()
def verify(
    env: str = EnvOpt,
    abstraction: str = AbsOpt,
    eps_r: float = typer.Option(0.0, "--eps-r"),
    eps_t: float = typer.Option(0.0, "--eps-t"),
    seed: int = typer.Option(0, "--seed"),
    checks: str = typer.Option("admissible,realizable", "--checks", help="Comma-separated: " + ",".join(KNOWN_CHECKS)),
    out: Path = typer.Option(Path("rarl-out"), "--out"),
    log_level: Optional[str] = LogOpt,
) -> None:
    """Check realizability, admissibility and structural relations of an abstraction."""
    config = _config("verify", log_level, env=env, abstraction=abstraction, eps_r=eps_r, eps_t=eps_t,
                     seed=seed, checks=[c.strip() for c in checks.split(",") if c.strip()], out=out)
    _dispatch(cmd_verify, config)


@app.command()
def realize(
    tuple_text: str = typer.Option(..., "--tuple", help="Abstract tuple p,s,a (p may be the dummy index S̄)."),
    env: str = EnvOpt,
    abstraction: str = AbsOpt,
    entry: Optional[str] = typer.Option(None, "--entry", help="Realize from this entry only (state index or label)."),
    eps_r: float = typer.Option(0.0, "--eps-r"),
    eps_t: float = typer.Option(0.0, "--eps-t"),
    eta: float = typer.Option(0.05, "--eta"),
    lam: float = typer.Option(0.05, "--lambda"),
    delta: float = typer.Option(0.1, "--delta"),
    seed: int = typer.Option(0, "--seed"),
    episodes: int = typer.Option(1000, "--episodes"),
    online: bool = typer.Option(False, "--online", help="Learn the option from simulated rollouts."),
    min_visits: Optional[int] = typer.Option(None, "--min-visits"),
    min_entry_samples: Optional[int] = typer.Option(None, "--min-entry-samples"),
    out: Path = typer.Option(Path("rarl-out"), "--out"),
    log_level: Optional[str] = LogOpt,
) -> None:
    """Realize one abstract tuple and write the option and its certificate."""
    tuple_ = parse_tuple(tuple_text)
    config = _config("realize", log_level, env=env, abstraction=abstraction, eps_r=eps_r, eps_t=eps_t, eta=eta,
                     lam=lam, delta=delta, seed=seed, episodes=episodes, online=online, min_visits=min_visits,
                     min_entry_samples=min_entry_samples, out=out)
    _dispatch(cmd_realize, config, tuple_, entry)


@app.command("run")
def run_command(
    env: str = EnvOpt,
    abstraction: str = AbsOpt,
    eps_r: float = typer.Option(0.05, "--eps-r"),
    eps_t: float = typer.Option(0.05, "--eps-t"),
    eta: float = typer.Option(0.05, "--eta"),
    lam: float = typer.Option(0.05, "--lambda"),
    eps: float = typer.Option(0.05, "--eps"),
    delta: float = typer.Option(0.1, "--delta"),
    seed: int = typer.Option(0, "--seed"),
    seeds: Optional[str] = typer.Option(None, "--seeds", help="Seed range a..b, run in parallel."),
    episodes: int = typer.Option(1000, "--episodes"),
    min_visits: Optional[int] = typer.Option(None, "--min-visits"),
    min_entry_samples: Optional[int] = typer.Option(None, "--min-entry-samples"),
    out: Path = typer.Option(Path("rarl-out"), "--out"),
    log_level: Optional[str] = LogOpt,
) -> None:
    """Run RARL and write per-episode CSVs, options, the corrected abstraction and meta.json."""
    config = _config("run", log_level, env=env, abstraction=abstraction, eps_r=eps_r, eps_t=eps_t, eta=eta,
                     lam=lam, eps=eps, delta=delta, seed=seed, seeds=parse_seed_range(seeds), episodes=episodes,
                     min_visits=min_visits, min_entry_samples=min_entry_samples, out=out)
    _dispatch(cmd_run, config)


@app.command()
def report(
    run_dir: Path = typer.Argument(..., help="Output directory of a previous run."),
    log_level: Optional[str] = LogOpt,
) -> None:
    """Summarize a run directory: escapes against the budget and value loss against the bound."""
    setup_logging(log_level or LOG_LEVEL)
    _dispatch(cmd_report, run_dir)


def main() -> None:
    app()
