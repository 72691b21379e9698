"""
Line-oriented text formats for environments, abstractions and options.

This module handles:
- Environment files:
    mdp S A gamma
    t s a s' p
    r s a v
    start s p
- Abstraction files (sp may be the dummy index Sb, or * for every predecessor):
    abs Sb Ab gammabar
    t sp s a s' p
    r sp s a v
    map s sb
    start sb p
- Option files (one line per block state of each option):
    options A
    o sp sb s p_0 ... p_{A-1}
    placeholder sp sb

Blank lines and lines starting with # are ignored. Rows must sum to 1 within
FILE_ROW_TOL and are renormalized after parsing; every error carries the
offending line number.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .abstraction import FRelativeOption, Mapping, Pair, PolicyOfOptions
from .config import FILE_ROW_TOL
from .errors import InvalidModelError, ParseError
from .mdp import GroundMdp, SecondOrderMdp

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# ---------------------------------------------------------------------------
# TOKENIZING
# ---------------------------------------------------------------------------


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def _int(token: str, lineno: int, path: Optional[str], upper: int, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"{what} {token!r} is not an integer", lineno, path) from None
    if not 0 <= value < upper:
        raise ParseError(f"{what} {value} out of range [0, {upper})", lineno, path)
    return value


def _float(token: str, lineno: int, path: Optional[str], what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{what} {token!r} is not a number", lineno, path) from None
    if not np.isfinite(value):
        raise ParseError(f"{what} must be finite", lineno, path)
    return value


def _arity(tokens: List[str], count: int, lineno: int, path: Optional[str]) -> None:
    if len(tokens) != count:
        raise ParseError(f"expected {count} fields in {tokens[0]!r} line, got {len(tokens)}", lineno, path)


def _normalize_rows(table: np.ndarray, origin: Dict[tuple, int], path: Optional[str], what: str) -> np.ndarray:
    """Check every row sums to 1 within FILE_ROW_TOL, then renormalize."""
    sums = np.atleast_1d(table.sum(axis=-1))
    bad = np.argwhere(np.abs(sums - 1.0) > FILE_ROW_TOL)
    if bad.size:
        row = tuple(int(i) for i in bad[0])
        raise ParseError(f"{what} row {row} sums to {float(sums[row])!r}", origin.get(row, 0), path)
    return table / sums.reshape(table.shape[:-1] + (1,))


def _read(path: PathLike) -> str:
    return Path(path).read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# ENVIRONMENT FILES
# ---------------------------------------------------------------------------


def parse_env(text: str, path: Optional[str] = None) -> GroundMdp:
    header = None
    transition = reward = start = None
    origin: Dict[tuple, int] = {}
    seen: Dict[tuple, int] = {}

    for lineno, tokens in _lines(text):
        kind = tokens[0]
        if header is None:
            if kind != "mdp":
                raise ParseError("file must start with 'mdp S A gamma'", lineno, path)
            _arity(tokens, 4, lineno, path)
            n = _int(tokens[1], lineno, path, 10**9, "S")
            m = _int(tokens[2], lineno, path, 10**9, "A")
            gamma = _float(tokens[3], lineno, path, "gamma")
            if n == 0 or m == 0:
                raise ParseError("S and A must be positive", lineno, path)
            header = (n, m, gamma)
            transition = np.zeros((n, m, n))
            reward = np.zeros((n, m))
            start = np.zeros(n)
            continue

        n, m, _ = header
        if kind == "t":
            _arity(tokens, 5, lineno, path)
            s = _int(tokens[1], lineno, path, n, "state")
            a = _int(tokens[2], lineno, path, m, "action")
            s2 = _int(tokens[3], lineno, path, n, "successor")
            key = ("t", s, a, s2)
            transition[s, a, s2] = _float(tokens[4], lineno, path, "probability")
            origin.setdefault((s, a), lineno)
        elif kind == "r":
            _arity(tokens, 4, lineno, path)
            s = _int(tokens[1], lineno, path, n, "state")
            a = _int(tokens[2], lineno, path, m, "action")
            key = ("r", s, a)
            reward[s, a] = _float(tokens[3], lineno, path, "reward")
        elif kind == "start":
            _arity(tokens, 3, lineno, path)
            s = _int(tokens[1], lineno, path, n, "state")
            key = ("start", s)
            start[s] = _float(tokens[2], lineno, path, "probability")
        else:
            raise ParseError(f"unknown line kind {kind!r}", lineno, path)
        if key in seen:
            raise ParseError(f"duplicate entry, first given on line {seen[key]}", lineno, path)
        seen[key] = lineno

    if header is None:
        raise ParseError("empty environment file", 0, path)
    transition = _normalize_rows(transition, origin, path, "transition")
    start = _normalize_rows(start, {}, path, "start")
    try:
        mdp = GroundMdp(transition, reward, header[2], start)
    except InvalidModelError as exc:
        raise ParseError(str(exc), 0, path) from exc
    logger.debug("[FILES] parsed environment: %d states, %d actions", mdp.num_states, mdp.num_actions)
    return mdp


def dump_env(mdp: GroundMdp) -> str:
    lines = [f"mdp {mdp.num_states} {mdp.num_actions} {mdp.gamma!r}"]
    for s, a, s2 in zip(*np.nonzero(mdp.transition)):
        lines.append(f"t {s} {a} {s2} {float(mdp.transition[s, a, s2])!r}")
    for s, a in zip(*np.nonzero(mdp.reward)):
        lines.append(f"r {s} {a} {float(mdp.reward[s, a])!r}")
    for s in np.flatnonzero(mdp.start_distribution):
        lines.append(f"start {s} {float(mdp.start_distribution[s])!r}")
    return "\n".join(lines) + "\n"


def load_env(path: PathLike) -> GroundMdp:
    return parse_env(_read(path), str(path))


def save_env(mdp: GroundMdp, path: PathLike) -> None:
    Path(path).write_text(dump_env(mdp), encoding="utf-8")


# ---------------------------------------------------------------------------
# ABSTRACTION FILES
# ---------------------------------------------------------------------------


def _predecessors(token: str, lineno: int, path: Optional[str], n_abs: int) -> range:
    if token == "*":
        return range(n_abs + 1)
    p = _int(token, lineno, path, n_abs + 1, "predecessor")
    return range(p, p + 1)


def parse_abstraction(text: str, path: Optional[str] = None,
                      ground: Optional[GroundMdp] = None) -> Tuple[SecondOrderMdp, Mapping]:
    """
    Parse an abstraction file. Without start lines the abstract start is the
    push-forward of the ground start, which needs `ground`.
    """
    header = None
    transition = reward = start = None
    origin: Dict[tuple, int] = {}
    assignment: Dict[int, int] = {}
    has_start = False

    for lineno, tokens in _lines(text):
        kind = tokens[0]
        if header is None:
            if kind != "abs":
                raise ParseError("file must start with 'abs Sb Ab gammabar'", lineno, path)
            _arity(tokens, 4, lineno, path)
            n_abs = _int(tokens[1], lineno, path, 10**9, "Sb")
            m_abs = _int(tokens[2], lineno, path, 10**9, "Ab")
            gamma_bar = _float(tokens[3], lineno, path, "gammabar")
            if n_abs == 0 or m_abs == 0:
                raise ParseError("Sb and Ab must be positive", lineno, path)
            header = (n_abs, m_abs, gamma_bar)
            transition = np.zeros((n_abs + 1, n_abs, m_abs, n_abs))
            reward = np.zeros((n_abs + 1, n_abs, m_abs))
            start = np.zeros(n_abs)
            continue

        n_abs, m_abs, _ = header
        if kind == "t":
            _arity(tokens, 6, lineno, path)
            s = _int(tokens[2], lineno, path, n_abs, "abstract state")
            a = _int(tokens[3], lineno, path, m_abs, "abstract action")
            s2 = _int(tokens[4], lineno, path, n_abs, "successor")
            p = _float(tokens[5], lineno, path, "probability")
            for prev in _predecessors(tokens[1], lineno, path, n_abs):
                transition[prev, s, a, s2] = p
                origin.setdefault((prev, s, a), lineno)
        elif kind == "r":
            _arity(tokens, 5, lineno, path)
            s = _int(tokens[2], lineno, path, n_abs, "abstract state")
            a = _int(tokens[3], lineno, path, m_abs, "abstract action")
            v = _float(tokens[4], lineno, path, "reward")
            for prev in _predecessors(tokens[1], lineno, path, n_abs):
                reward[prev, s, a] = v
        elif kind == "map":
            _arity(tokens, 3, lineno, path)
            s = _int(tokens[1], lineno, path, 10**9, "ground state")
            if s in assignment:
                raise ParseError(f"ground state {s} mapped twice", lineno, path)
            assignment[s] = _int(tokens[2], lineno, path, n_abs, "abstract state")
        elif kind == "start":
            _arity(tokens, 3, lineno, path)
            s = _int(tokens[1], lineno, path, n_abs, "abstract state")
            start[s] = _float(tokens[2], lineno, path, "probability")
            has_start = True
        else:
            raise ParseError(f"unknown line kind {kind!r}", lineno, path)

    if header is None:
        raise ParseError("empty abstraction file", 0, path)
    if sorted(assignment) != list(range(len(assignment))) or not assignment:
        raise ParseError("map lines must cover ground states 0..S-1 exactly once", 0, path)
    n_abs, _, gamma_bar = header
    try:
        mapping = Mapping(np.array([assignment[s] for s in range(len(assignment))]), n_abs)
    except InvalidModelError as exc:
        raise ParseError(str(exc), 0, path) from exc
    if ground is not None and mapping.num_states != ground.num_states:
        raise ParseError(f"mapping covers {mapping.num_states} states, environment has {ground.num_states}", 0, path)

    if has_start:
        start = _normalize_rows(start, {}, path, "start")
    elif ground is not None:
        start = mapping.marginal(ground.start_distribution)
    else:
        raise ParseError("no start lines and no environment to derive them from", 0, path)

    transition = _normalize_rows(transition, origin, path, "transition")
    try:
        model = SecondOrderMdp(transition, reward, gamma_bar, start)
    except InvalidModelError as exc:
        raise ParseError(str(exc), 0, path) from exc
    logger.debug("[FILES] parsed abstraction: %d abstract states, %d abstract actions",
                 model.num_abstract_states, model.num_abstract_actions)
    return model, mapping


def dump_abstraction(model: SecondOrderMdp, mapping: Mapping) -> str:
    """First-order models are written with * predecessors."""
    n_abs = model.num_abstract_states
    lines = [f"abs {n_abs} {model.num_abstract_actions} {model.gamma_bar!r}"]
    if model.is_first_order():
        view = model.first_order_view()
        transition, reward = view.transition, view.reward
        for s, a, s2 in zip(*np.nonzero(transition)):
            lines.append(f"t * {s} {a} {s2} {float(transition[s, a, s2])!r}")
        for s, a in zip(*np.nonzero(reward)):
            lines.append(f"r * {s} {a} {float(reward[s, a])!r}")
    else:
        for p, s, a, s2 in zip(*np.nonzero(model.transition)):
            lines.append(f"t {p} {s} {a} {s2} {float(model.transition[p, s, a, s2])!r}")
        for p, s, a in zip(*np.nonzero(model.reward)):
            lines.append(f"r {p} {s} {a} {float(model.reward[p, s, a])!r}")
    for s, sb in enumerate(mapping.assignment):
        lines.append(f"map {s} {int(sb)}")
    for sb in np.flatnonzero(model.abstract_start):
        lines.append(f"start {sb} {float(model.abstract_start[sb])!r}")
    return "\n".join(lines) + "\n"


def load_abstraction(path: PathLike, ground: Optional[GroundMdp] = None) -> Tuple[SecondOrderMdp, Mapping]:
    return parse_abstraction(_read(path), str(path), ground)


def save_abstraction(model: SecondOrderMdp, mapping: Mapping, path: PathLike) -> None:
    Path(path).write_text(dump_abstraction(model, mapping), encoding="utf-8")


# ---------------------------------------------------------------------------
# OPTION FILES
# ---------------------------------------------------------------------------


def parse_options(text: str, mapping: Mapping, path: Optional[str] = None) -> PolicyOfOptions:
    num_actions = None
    rows: Dict[Pair, Dict[int, np.ndarray]] = {}
    first_line: Dict[Pair, int] = {}
    placeholders = set()
    n_abs = mapping.num_abstract_states

    for lineno, tokens in _lines(text):
        kind = tokens[0]
        if num_actions is None:
            if kind != "options":
                raise ParseError("file must start with 'options A'", lineno, path)
            _arity(tokens, 2, lineno, path)
            num_actions = _int(tokens[1], lineno, path, 10**9, "A")
            continue
        if kind == "placeholder":
            _arity(tokens, 3, lineno, path)
            placeholders.add((_int(tokens[1], lineno, path, n_abs + 1, "predecessor"),
                              _int(tokens[2], lineno, path, n_abs, "abstract state")))
            continue
        if kind != "o":
            raise ParseError(f"unknown line kind {kind!r}", lineno, path)
        _arity(tokens, 4 + num_actions, lineno, path)
        pair = (_int(tokens[1], lineno, path, n_abs + 1, "predecessor"),
                _int(tokens[2], lineno, path, n_abs, "abstract state"))
        s = _int(tokens[3], lineno, path, mapping.num_states, "ground state")
        if mapping(s) != pair[1]:
            raise ParseError(f"state {s} is not in block {pair[1]}", lineno, path)
        probs = np.array([_float(t, lineno, path, "probability") for t in tokens[4:]])
        if np.any(probs < 0.0) or abs(probs.sum() - 1.0) > FILE_ROW_TOL:
            raise ParseError(f"action distribution of state {s} does not sum to 1", lineno, path)
        block_rows = rows.setdefault(pair, {})
        if s in block_rows:
            raise ParseError(f"state {s} listed twice for option {pair}", lineno, path)
        block_rows[s] = probs / probs.sum()
        first_line.setdefault(pair, lineno)

    if num_actions is None:
        raise ParseError("empty option file", 0, path)
    omega = PolicyOfOptions()
    for pair, block_rows in rows.items():
        states = mapping.block(pair[1])
        missing = [int(s) for s in states if int(s) not in block_rows]
        if missing:
            raise ParseError(f"option {pair} has no row for states {missing}", first_line[pair], path)
        option = FRelativeOption(pair[0], pair[1], states, np.array([block_rows[int(s)] for s in states]))
        omega.set(option, placeholder=pair in placeholders)
    logger.debug("[FILES] parsed %d options", len(omega))
    return omega


def dump_options(omega: PolicyOfOptions) -> str:
    options = [omega.options[pair] for pair in sorted(omega.options)]
    num_actions = options[0].num_actions if options else 0
    lines = [f"options {num_actions}"]
    for option in options:
        for s, row in zip(option.states, option.policy):
            lines.append(f"o {option.previous} {option.abstract_state} {int(s)} "
                         + " ".join(repr(float(x)) for x in row))
    for pair in sorted(omega.placeholders):
        lines.append(f"placeholder {pair[0]} {pair[1]}")
    return "\n".join(lines) + "\n"


def load_options(path: PathLike, mapping: Mapping) -> PolicyOfOptions:
    return parse_options(_read(path), mapping, str(path))


def save_options(omega: PolicyOfOptions, path: PathLike) -> None:
    Path(path).write_text(dump_options(omega), encoding="utf-8")
