"""
Fixture environments and abstraction synthesis.

This module handles:
- Grid worlds (the corridor and the two-region layout) with deterministic or
  slipping dynamics.
- The three-state chain whose abstraction is realizable but not a homomorphism.
- Random MDPs, random mappings and random "rooms" (one door per block).
- Mirrored arms: a symmetric MDP folded by a homomorphism.
- synthesize_admissible_abstraction: a first-order abstract model whose
  targets dominate every deterministic option of every block.
- A registry of builtins used by the CLI.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .abstraction import AbstractionPair, Mapping, compute_entries_exits, enumerate_options, solve_block
from .config import CHECK_TOL, ENUMERATION_CAP
from .errors import InvalidModelError, SynthesisError
from .mdp import GroundMdp, SecondOrderMdp, identity_abstract_model

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]
MOVES: List[Cell] = [(-1, 0), (0, 1), (1, 0), (0, -1)]  # up, right, down, left

# ---------------------------------------------------------------------------
# GRID WORLDS
# ---------------------------------------------------------------------------


class GridWorldSpec(BaseModel):
    height: int = Field(..., ge=1)
    width: int = Field(..., ge=1)
    walls: List[Cell] = Field(default_factory=list)
    coloring: Dict[Cell, int]
    slip: float = Field(0.0, ge=0.0, le=1.0)
    reward_cells: Dict[Cell, float] = Field(default_factory=dict)
    absorbing: List[Cell] = Field(default_factory=list)
    start_cells: List[Cell]
    gamma: float = Field(0.95, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def check_layout(self) -> "GridWorldSpec":
        if not self.start_cells:
            raise ValueError("start cells must not be empty")
        walls = set(self.walls)
        for r in range(self.height):
            for c in range(self.width):
                if (r, c) not in walls and (r, c) not in self.coloring:
                    raise ValueError(f"cell {(r, c)} has no block colour")
        return self

    def cells(self) -> List[Cell]:
        walls = set(self.walls)
        return [(r, c) for r in range(self.height) for c in range(self.width) if (r, c) not in walls]


def build_grid(spec: GridWorldSpec) -> Tuple[GroundMdp, Mapping, List[Cell]]:
    """
    Four-move grid; bumping into walls or the border stays put. With slip p
    the move direction is uniform over the four directions with probability p.
    """
    cells = spec.cells()
    index = {cell: i for i, cell in enumerate(cells)}
    n = len(cells)
    transition = np.zeros((n, len(MOVES), n))
    reward = np.zeros((n, len(MOVES)))
    absorbing = set(spec.absorbing)

    def target(cell: Cell, move: Cell) -> int:
        nxt = (cell[0] + move[0], cell[1] + move[1])
        return index.get(nxt, index[cell])

    for cell, i in index.items():
        reward[i] = spec.reward_cells.get(cell, 0.0)
        if cell in absorbing:
            transition[i, :, i] = 1.0
            continue
        for a, move in enumerate(MOVES):
            transition[i, a, target(cell, move)] += 1.0 - spec.slip
            for other in MOVES:
                transition[i, a, target(cell, other)] += spec.slip / len(MOVES)

    start = np.zeros(n)
    for cell in spec.start_cells:
        start[index[cell]] = 1.0 / len(spec.start_cells)
    mapping = Mapping(np.array([spec.coloring[c] for c in cells]), max(spec.coloring.values()) + 1)
    mdp = GroundMdp(transition, reward, spec.gamma, start)
    logger.debug("[ENV] grid %dx%d: %d cells, %d blocks", spec.height, spec.width, n, mapping.num_abstract_states)
    return mdp, mapping, cells


@dataclass
class Fixture:
    """A ground MDP with its mapping, an optional abstract model and named states."""

    name: str
    ground: GroundMdp
    mapping: Mapping
    abstract: Optional[SecondOrderMdp] = None
    labels: Dict[str, int] = field(default_factory=dict)
    cells: List[Cell] = field(default_factory=list)

    def pair(self, abstract: Optional[SecondOrderMdp] = None) -> AbstractionPair:
        model = abstract if abstract is not None else self.abstract
        if model is None:
            raise InvalidModelError(f"fixture {self.name} has no abstract model")
        return AbstractionPair(self.ground, model, self.mapping)


CORRIDOR_LENGTH = 23


def corridor_spec(gamma: float = 0.95, slip: float = 0.0) -> GridWorldSpec:
    """
    Three rows. Row 2 is the long gray corridor (block 0) ending in the goal
    (block 2); row 0 is the upper room (block 1), joined to the corridor by two
    shafts in row 1 at columns 1 and 11.
    """
    width = CORRIDOR_LENGTH
    coloring: Dict[Cell, int] = {}
    walls: List[Cell] = [(0, 0)] + [(0, c) for c in range(12, width)]
    for c in range(1, 12):
        coloring[(0, c)] = 1
    for c in range(width):
        if c in (1, 11):
            coloring[(1, c)] = 1
        else:
            walls.append((1, c))
    for c in range(width - 1):
        coloring[(2, c)] = 0
    goal = (2, width - 1)
    coloring[goal] = 2
    return GridWorldSpec(
        height=3, width=width, walls=walls, coloring=coloring, slip=slip,
        reward_cells={goal: 1.0}, absorbing=[goal], start_cells=[(0, 6)], gamma=gamma,
    )


def build_corridor_grid(gamma: float = 0.95, slip: float = 0.0) -> Tuple[GroundMdp, Mapping]:
    """Corridor in which the goal is 11 steps from s2 = (2, 11) and 21 from s1 = (2, 1)."""
    mdp, mapping, _ = build_grid(corridor_spec(gamma, slip))
    return mdp, mapping


def corridor_fixture(gamma: float = 0.95, slip: float = 0.0) -> Fixture:
    mdp, mapping, cells = build_grid(corridor_spec(gamma, slip))
    index = {cell: i for i, cell in enumerate(cells)}
    return Fixture(
        name="corridor" if slip == 0.0 else "corridor-slip",
        ground=mdp,
        mapping=mapping,
        abstract=corridor_abstraction(gamma),
        labels={"s1": index[(2, 1)], "s2": index[(2, 11)], "start": index[(0, 6)],
                "goal": index[(2, CORRIDOR_LENGTH - 1)]},
        cells=cells,
    )


def corridor_abstraction(gamma: float = 0.95, target: float = 0.6) -> SecondOrderMdp:
    """
    First-order model of the corridor with one "go to block k" action per block.

    Moving to an adjacent block succeeds with the probability p that makes
    the discounted exit probability equal `target` (h̃ = target·(1-γ) at γ̄ = γ);
    otherwise the block self-loops. Non-adjacent targets and "go to self"
    self-loop. The goal block is absorbing with reward 1.
    """
    p = target * (1.0 - gamma) / (gamma * (1.0 - target))
    if not 0.0 < p <= 1.0:
        raise InvalidModelError(f"target {target} is not reachable at gamma {gamma}")
    adjacent = {0: (1, 2), 1: (0,), 2: ()}
    transition = np.zeros((3, 3, 3))
    reward = np.zeros((3, 3))
    for s in range(3):
        for a in range(3):
            if a in adjacent[s]:
                transition[s, a, a] = p
                transition[s, a, s] = 1.0 - p
            else:
                transition[s, a, s] = 1.0
    reward[2] = 1.0
    return SecondOrderMdp.from_first_order(transition, reward, gamma, np.array([0.0, 1.0, 0.0]))


def inflate_rewards(model: SecondOrderMdp, value: float = 1.0) -> SecondOrderMdp:
    """The same model with every abstract reward set to `value`."""
    return model.with_reward(np.full(model.reward.shape, value))


def two_region_spec(gamma: float = 0.95, slip: float = 0.0) -> GridWorldSpec:
    """
    3x7 grid: columns 0-1 form block 1, columns 2-4 the gray block 0 and
    columns 5-6 block 2, with a wall at (2, 5). Block 0 has three entries from
    block 1 and five exits.
    """
    coloring: Dict[Cell, int] = {}
    for r in range(3):
        for c in range(7):
            if (r, c) == (2, 5):
                continue
            coloring[(r, c)] = 1 if c < 2 else (0 if c < 5 else 2)
    goal = (0, 6)
    return GridWorldSpec(
        height=3, width=7, walls=[(2, 5)], coloring=coloring, slip=slip,
        reward_cells={goal: 1.0}, absorbing=[goal], start_cells=[(1, 0)], gamma=gamma,
    )


def build_two_region_grid(gamma: float = 0.95, slip: float = 0.0) -> Tuple[GroundMdp, Mapping]:
    mdp, mapping, _ = build_grid(two_region_spec(gamma, slip))
    return mdp, mapping


def two_region_fixture(gamma: float = 0.95, slip: float = 0.0) -> Fixture:
    mdp, mapping, cells = build_grid(two_region_spec(gamma, slip))
    index = {cell: i for i, cell in enumerate(cells)}
    return Fixture(
        name="two-region" if slip == 0.0 else "two-region-slip",
        ground=mdp,
        mapping=mapping,
        labels={"start": index[(1, 0)], "goal": index[(0, 6)]},
        cells=cells,
    )


# ---------------------------------------------------------------------------
# CHAIN
# ---------------------------------------------------------------------------


def build_chain(gamma: float = 0.95) -> Tuple[GroundMdp, Mapping, SecondOrderMdp]:
    """
    s0 → s1 → s2 (absorbing, reward 1) with s0, s1 merged.

    The abstract block of {s0, s1} self-loops with probability 1/(1+γ) and
    moves on with γ/(1+γ), which reproduces the two-step discounted exit.
    """
    transition = np.zeros((3, 1, 3))
    transition[0, 0, 1] = 1.0
    transition[1, 0, 2] = 1.0
    transition[2, 0, 2] = 1.0
    reward = np.array([[0.0], [0.0], [1.0]])
    mdp = GroundMdp(transition, reward, gamma, np.array([1.0, 0.0, 0.0]))
    mapping = Mapping(np.array([0, 0, 1]), 2)

    abs_t = np.zeros((2, 1, 2))
    abs_t[0, 0] = [1.0 / (1.0 + gamma), gamma / (1.0 + gamma)]
    abs_t[1, 0, 1] = 1.0
    abs_r = np.array([[0.0], [1.0]])
    model = SecondOrderMdp.from_first_order(abs_t, abs_r, gamma, np.array([1.0, 0.0]))
    return mdp, mapping, model


build_appendixB_chain = build_chain


def chain_fixture(gamma: float = 0.95) -> Fixture:
    mdp, mapping, model = build_chain(gamma)
    return Fixture("chain", mdp, mapping, model, labels={"s0": 0, "s1": 1, "s2": 2})


# ---------------------------------------------------------------------------
# RANDOM FIXTURES
# ---------------------------------------------------------------------------


def random_mdp(seed: int, num_states: int, num_actions: int, branching: int,
               gamma: float = 0.9, reward_scale: float = 1.0) -> GroundMdp:
    """Dirichlet rows on `branching` random successors, uniform rewards, Dirichlet start."""
    rng = np.random.default_rng(seed)
    support = min(branching, num_states)
    transition = np.zeros((num_states, num_actions, num_states))
    for s in range(num_states):
        for a in range(num_actions):
            succ = rng.choice(num_states, size=support, replace=False)
            transition[s, a, succ] = rng.dirichlet(np.ones(support))
    transition /= transition.sum(axis=2, keepdims=True)
    reward = reward_scale * rng.uniform(0.0, 1.0, size=(num_states, num_actions))
    start = rng.dirichlet(np.ones(num_states))
    return GroundMdp(transition, reward, gamma, start / start.sum())


def random_mapping(seed: int, num_states: int, num_abstract_states: int) -> Mapping:
    """Random surjective mapping: a random permutation seeds every block once."""
    if num_abstract_states > num_states:
        raise InvalidModelError("cannot map onto more abstract states than ground states")
    rng = np.random.default_rng(seed)
    assignment = rng.integers(0, num_abstract_states, size=num_states)
    order = rng.permutation(num_states)
    assignment[order[:num_abstract_states]] = np.arange(num_abstract_states)
    return Mapping(assignment, num_abstract_states)


def random_rooms(seed: int, num_rooms: int, room_size: int, num_actions: int = 2,
                 branching: int = 2, gamma: float = 0.9) -> Tuple[GroundMdp, Mapping]:
    """
    Random MDP partitioned into rooms that can only be entered through their
    first state (the door); the episode starts at the door of room 0.
    """
    rng = np.random.default_rng(seed)
    num_states = num_rooms * room_size
    room = np.repeat(np.arange(num_rooms), room_size)
    doors = np.arange(num_rooms) * room_size
    transition = np.zeros((num_states, num_actions, num_states))
    for s in range(num_states):
        inside = np.flatnonzero(room == room[s])
        candidates = np.concatenate([inside, doors[doors != room[s] * room_size]])
        for a in range(num_actions):
            succ = rng.choice(candidates, size=min(branching, candidates.size), replace=False)
            transition[s, a, succ] = rng.dirichlet(np.ones(succ.size))
    transition /= transition.sum(axis=2, keepdims=True)
    reward = rng.uniform(0.0, 1.0, size=(num_states, num_actions))
    start = np.zeros(num_states)
    start[0] = 1.0
    return GroundMdp(transition, reward, gamma, start), Mapping(room, num_rooms)


# ---------------------------------------------------------------------------
# MIRRORED ARMS
# ---------------------------------------------------------------------------


@dataclass
class MirroredArms:
    """Symmetric MDP, its folded image, the folding F and action maps g_s."""

    ground: GroundMdp
    image: GroundMdp
    mapping: Mapping
    action_maps: np.ndarray

    def abstract(self) -> SecondOrderMdp:
        return SecondOrderMdp.from_first_order(
            self.image.transition, self.image.reward, self.image.gamma, self.image.start_distribution
        )

    def pair(self) -> AbstractionPair:
        return AbstractionPair(self.ground, self.abstract(), self.mapping)


def build_mirrored_arms(length: int, slip: float = 0.0, reward_seed: int = 0, relabel: bool = False,
                        gamma: float = 0.9) -> MirroredArms:
    """
    A center c with two arms L1..Lk and R1..Rk; actions are "out" (away from c)
    and "in". Rewards depend only on the distance to c and the move; the arm
    ends pay 1. A move fails (stays put) with probability `slip`.

    relabel=False: both arms use the same action labels and "out" at c splits
    evenly between the arms; g_s is the identity.
    relabel=True: the right arm swaps the labels, and at c action 0 leads to
    L1 and action 1 to R1; g_s undoes the relabelling.
    """
    OUT, IN = 0, 1
    rng = np.random.default_rng(reward_seed)
    r_move = rng.uniform(0.0, 0.5, size=(length + 1, 2))
    r_move[length] = 1.0

    # image: states 0..k by distance to c
    image_t = np.zeros((length + 1, 2, length + 1))
    for i in range(length + 1):
        out_to = min(i + 1, length)
        in_to = max(i - 1, 0)
        if i == 0 and relabel:
            in_to = 1
        for a, to in ((OUT, out_to), (IN, in_to)):
            image_t[i, a, to] += 1.0 - slip
            image_t[i, a, i] += slip
    start_image = np.zeros(length + 1)
    start_image[0] = 1.0
    image = GroundMdp(image_t, r_move, gamma, start_image)

    # ground: 0 = c, 1..k = L, k+1..2k = R
    n = 2 * length + 1
    left = lambda i: i if i > 0 else 0
    right = lambda i: length + i if i > 0 else 0
    transition = np.zeros((n, 2, n))
    reward = np.zeros((n, 2))
    action_maps = np.zeros((n, 2), dtype=np.int64)
    action_maps[:] = [OUT, IN]

    transition[0, :, 0] = slip
    reward[0] = r_move[0]
    if relabel:
        transition[0, 0, left(1)] += 1.0 - slip
        transition[0, 1, right(1)] += 1.0 - slip
    else:
        transition[0, OUT, left(1)] += 0.5 * (1.0 - slip)
        transition[0, OUT, right(1)] += 0.5 * (1.0 - slip)
        transition[0, IN, 0] += 1.0 - slip

    for side, place in (("L", left), ("R", right)):
        for i in range(1, length + 1):
            s = place(i)
            labels = (IN, OUT) if (relabel and side == "R") else (OUT, IN)
            action_maps[s] = labels
            for a in range(2):
                move = labels[a]
                to = place(min(i + 1, length)) if move == OUT else place(i - 1)
                transition[s, a, to] += 1.0 - slip
                transition[s, a, s] += slip
                reward[s, a] = r_move[i, move]

    start = np.zeros(n)
    start[0] = 1.0
    ground = GroundMdp(transition, reward, gamma, start)
    assignment = np.array([0] + list(range(1, length + 1)) * 2)
    return MirroredArms(ground, image, Mapping(assignment, length + 1), action_maps)


# ---------------------------------------------------------------------------
# ABSTRACTION SYNTHESIS
# ---------------------------------------------------------------------------


def _pareto_front(vectors: List[np.ndarray]) -> List[np.ndarray]:
    """Maximal vectors (first occurrence kept among duplicates)."""
    front: List[np.ndarray] = []
    for i, v in enumerate(vectors):
        dominated = False
        for j, w in enumerate(vectors):
            if i == j:
                continue
            if np.all(w >= v - CHECK_TOL) and (np.any(w > v + CHECK_TOL) or j < i):
                dominated = True
                break
        if not dominated:
            front.append(v)
    return front


def _min_gamma_bar(exit_mass: float, value: float, gamma: float) -> float:
    """Smallest γ̄ for which a target (Σh̃ = exit_mass, Ṽ = value) fits a first-order row."""
    scale = 1.0 - gamma
    need = exit_mass / scale
    if value > 0.0:
        need = max(need, 1.0 - (scale - exit_mass) / (scale * value))
    return need


def _fit_row(targets: np.ndarray, value: float, abstract_state: int, gamma: float,
             gamma_bar: float) -> Tuple[np.ndarray, float]:
    """First-order T̄(·|s̄, ā) and R̄(s̄, ā) whose targets equal (targets, value)."""
    scale = 1.0 - gamma
    mass = float(targets.sum())
    x = mass / (scale * gamma_bar)
    stay = float(np.clip((1.0 - x) / (1.0 - x * gamma_bar), 0.0, 1.0))
    row = targets * (1.0 - gamma_bar * stay) / (scale * gamma_bar)
    row[abstract_state] = stay
    row = np.clip(row, 0.0, None)
    row /= row.sum()
    reward = float(np.clip(value * (1.0 - gamma_bar * stay), 0.0, 1.0))
    return row, reward


def synthesize_admissible_abstraction(mdp: GroundMdp, mapping: Mapping, gamma_bar: float,
                                      cap: Optional[int] = None) -> SecondOrderMdp:
    """
    First-order model whose abstract actions are the Pareto-maximal
    (entry-wise max h^o, max V^o) vectors of the deterministic options of each
    block, inverted in closed form. Raises SynthesisError with the minimal
    feasible γ̄ (None when even γ̄ = γ fails).
    """
    cap = ENUMERATION_CAP if cap is None else cap
    gamma = mdp.gamma
    n_abs = mapping.num_abstract_states
    sets = compute_entries_exits(mdp, mapping)
    staging = AbstractionPair(mdp, identity_abstract_model_for(mapping, mdp), mapping)

    per_block: List[List[np.ndarray]] = []
    required = 0.0
    for s in range(n_abs):
        entries = sorted(set().union(*(sets.entries.get((p, s), frozenset()) for p in range(n_abs + 1) if p != s)))
        if not entries:
            entries = mapping.block(s)[:1].tolist()
        vectors = []
        block = staging.block(s)
        rows = np.array([block.local_index(e) for e in entries])
        for profile in _block_profiles(staging, s, rows, cap):
            h, v = profile
            vec = np.append(h.max(axis=0)[:n_abs], v.max())
            vec[s] = 0.0
            vectors.append(vec)
        front = _pareto_front(vectors)
        per_block.append(front)
        for vec in front:
            required = max(required, _min_gamma_bar(float(vec[:n_abs].sum()), float(vec[n_abs]), gamma))

    if required > gamma_bar + CHECK_TOL:
        minimal = required if required <= gamma + CHECK_TOL else None
        raise SynthesisError(
            f"no first-order model fits at gamma_bar={gamma_bar}; minimal feasible gamma_bar is {minimal}",
            minimal,
        )

    num_actions = max(len(front) for front in per_block)
    transition = np.zeros((n_abs, num_actions, n_abs))
    reward = np.zeros((n_abs, num_actions))
    for s, front in enumerate(per_block):
        for a in range(num_actions):
            vec = front[min(a, len(front) - 1)]
            transition[s, a], reward[s, a] = _fit_row(vec[:n_abs], float(vec[n_abs]), s, gamma, gamma_bar)
    model = SecondOrderMdp.from_first_order(transition, reward, gamma_bar, mapping.marginal(mdp.start_distribution))
    logger.info("[ENV] synthesized abstraction: %d states, %d actions, gamma_bar=%.4g", n_abs, num_actions, gamma_bar)
    return model


def identity_abstract_model_for(mapping: Mapping, mdp: GroundMdp) -> SecondOrderMdp:
    """Placeholder model with the right shape, used only to reach block machinery."""
    n_abs = mapping.num_abstract_states
    transition = np.eye(n_abs)[:, None, :].copy()
    return SecondOrderMdp.from_first_order(transition, np.zeros((n_abs, 1)), mdp.gamma,
                                           mapping.marginal(mdp.start_distribution))


def _block_profiles(pair: AbstractionPair, abstract_state: int, rows: np.ndarray, cap: int):
    block = pair.block(abstract_state)
    for option in enumerate_options(pair, pair.abstract.dummy_start, abstract_state, cap):
        solution = solve_block(block, option)
        yield solution.occupancy_by_block[rows], solution.values[rows]


# ---------------------------------------------------------------------------
# BUILTINS
# ---------------------------------------------------------------------------


def random_identity_fixture(seed: int = 0, num_states: int = 5, num_actions: int = 2,
                            gamma: float = 0.9) -> Fixture:
    mdp = random_mdp(seed, num_states, num_actions, branching=min(3, num_states), gamma=gamma)
    return Fixture(f"random-{seed}", mdp, Mapping.identity(num_states), identity_abstract_model(mdp))


def rooms_fixture(seed: int = 0, num_rooms: int = 3, room_size: int = 2, gamma: float = 0.9) -> Fixture:
    mdp, mapping = random_rooms(seed, num_rooms, room_size, gamma=gamma)
    return Fixture(f"rooms-{seed}", mdp, mapping, synthesize_admissible_abstraction(mdp, mapping, gamma))


def mirrored_fixture(seed: int = 0, length: int = 3) -> Fixture:
    arms = build_mirrored_arms(length, slip=0.1, reward_seed=seed)
    return Fixture(f"mirrored-{seed}", arms.ground, arms.mapping, arms.abstract())


BUILTINS: Dict[str, Callable[..., Fixture]] = {
    "corridor": lambda seed=0: corridor_fixture(),
    "corridor-inflated": lambda seed=0: _inflated(corridor_fixture()),
    "corridor-slip": lambda seed=0: corridor_fixture(slip=0.1),
    "two-region": lambda seed=0: two_region_fixture(),
    "two-region-slip": lambda seed=0: two_region_fixture(slip=0.1),
    "chain": lambda seed=0: chain_fixture(),
    "appendixB-chain": lambda seed=0: chain_fixture(),
    "random": lambda seed=0: random_identity_fixture(seed),
    "rooms": lambda seed=0: rooms_fixture(seed),
    "mirrored-arms": lambda seed=0: mirrored_fixture(seed),
}


def _inflated(fixture: Fixture) -> Fixture:
    fixture.name = f"{fixture.name}-inflated"
    fixture.abstract = inflate_rewards(fixture.abstract)
    return fixture


def builtin(name: str, seed: int = 0) -> Fixture:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise InvalidModelError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(seed=seed)
