"""Kripke structures and epistemic-state updates.

Worlds are dense integer ids; per-agent accessibility relations are stored
as one bitmask per source world.  Refine shrinks a relation against an
evidence predicate, revise re-wires the actual world's row to a target set,
and frame conditions (reflexive / transitive / symmetric) can be checked by
brute force since world counts stay small.

The three-cell grid fixture and its refine / revise replay reproduce the
accessible-world sets used throughout the unit and acceptance tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class KripkeError(Exception):
    pass


class EmptyAccessibleSetError(KripkeError):
    """Refine would leave a source world with no accessible worlds.

    Signals that the evidence contradicts the whole belief state and a
    revise (re-wiring) is required instead.
    """


class UnsatisfiableTargetError(KripkeError):
    pass


FRAME_CONDITIONS = ("reflexive", "transitive", "symmetric")


@dataclass(frozen=True)
class World:
    id: int
    label: str


@dataclass(frozen=True)
class Accessibility:
    """Per-agent relation: rows[w] is a bitmask of worlds accessible from w."""

    agent: int
    rows: tuple

    @property
    def n_worlds(self) -> int:
        return len(self.rows)

    def accessible_from(self, world: int) -> set[int]:
        return _bits_to_set(self.rows[world])

    def pairs(self) -> set[tuple[int, int]]:
        return {(w, w2) for w in range(len(self.rows)) for w2 in _bits_to_set(self.rows[w])}

    def contains(self, w: int, w2: int) -> bool:
        return bool(self.rows[w] >> w2 & 1)


def relation_from_pairs(agent: int, n_worlds: int, pairs) -> Accessibility:
    rows = [0] * n_worlds
    for w, w2 in pairs:
        rows[w] |= 1 << w2
    return Accessibility(agent, tuple(rows))


def relation_from_partition(agent: int, blocks) -> Accessibility:
    """Equivalence relation from a partition given as an iterable of id lists."""
    n = sum(len(b) for b in blocks)
    rows = [0] * n
    for block in blocks:
        mask = 0
        for w in block:
            mask |= 1 << w
        for w in block:
            rows[w] = mask
    return Accessibility(agent, tuple(rows))


def _bits_to_set(mask: int) -> set[int]:
    out = set()
    w = 0
    while mask:
        if mask & 1:
            out.add(w)
        mask >>= 1
        w += 1
    return out


def _set_to_bits(ids) -> int:
    mask = 0
    for w in ids:
        mask |= 1 << w
    return mask


@dataclass
class KripkeModel:
    """Worlds + valuation + one accessibility relation per agent."""

    worlds: list
    valuation: dict  # world id -> frozenset of atom names
    relations: dict  # agent id -> Accessibility
    conditions: tuple = ("reflexive",)
    atoms: frozenset = field(default=frozenset())

    def __post_init__(self):
        if not self.atoms:
            names = set()
            for v in self.valuation.values():
                names |= set(v)
            self.atoms = frozenset(names)
        ids = [w.id for w in self.worlds]
        if ids != list(range(len(self.worlds))):
            raise KripkeError("world ids must be dense 0..n-1")
        for agent, rel in self.relations.items():
            if not check_frame(rel, self.conditions):
                raise KripkeError(f"relation of agent {agent} violates {self.conditions}")

    @property
    def agents(self) -> list[int]:
        return sorted(self.relations)

    def world_by_label(self, label: str) -> int:
        for w in self.worlds:
            if w.label == label:
                return w.id
        raise KripkeError(f"no world labelled {label!r}")

    def labels(self, ids) -> set[str]:
        return {self.worlds[w].label for w in ids}


def accessible_from(model: KripkeModel, agent: int, world: int) -> set[int]:
    if agent not in model.relations:
        raise KripkeError(f"unknown agent {agent}")
    if not 0 <= world < len(model.worlds):
        raise KripkeError(f"unknown world {world}")
    return model.relations[agent].accessible_from(world)


def apply_refine(rel: Accessibility, evidence) -> Accessibility:
    """Drop every pair whose target world violates the evidence predicate.

    Raises EmptyAccessibleSetError if any nonempty row would become empty;
    that situation calls for a revise, not a refine.
    """
    n = rel.n_worlds
    keep = _set_to_bits(w for w in range(n) if evidence(w))
    rows = []
    for w in range(n):
        row = rel.rows[w] & keep
        if row == 0 and rel.rows[w] != 0:
            raise EmptyAccessibleSetError(
                f"evidence removes every world accessible from {w}")
        rows.append(row)
    return Accessibility(rel.agent, tuple(rows))


def apply_revise(rel: Accessibility, target, actual: int,
                 conditions: tuple = ()) -> Accessibility:
    """Re-wire so the actual world's accessible set is exactly the target set.

    Other rows are left alone except for minimal frame repair: self-loops
    are restored on non-actual rows when reflexivity is declared, and the
    transitive closure is completed when transitivity is declared.
    """
    n = rel.n_worlds
    target_mask = _set_to_bits(w for w in range(n) if target(w))
    if target_mask == 0:
        raise UnsatisfiableTargetError("no world satisfies the revise target")
    rows = list(rel.rows)
    rows[actual] = target_mask
    if "reflexive" in conditions:
        for w in range(n):
            if w != actual:
                rows[w] |= 1 << w
    if "transitive" in conditions:
        _transitive_close(rows, frozen=actual)
    return Accessibility(rel.agent, tuple(rows))


def _transitive_close(rows: list, frozen: int) -> None:
    # Closure that never touches the frozen row (its content is the revise
    # contract); additions demanded there would make the target inexact.
    n = len(rows)
    changed = True
    while changed:
        changed = False
        for w in range(n):
            if w == frozen:
                continue
            row = rows[w]
            acc = row
            m = row
            w2 = 0
            while m:
                if m & 1:
                    acc |= rows[w2]
                m >>= 1
                w2 += 1
            if acc != row:
                rows[w] = acc
                changed = True


def check_frame(rel: Accessibility, conditions) -> bool:
    """Brute-force check of the declared frame conditions."""
    n = rel.n_worlds
    for cond in conditions:
        if cond == "reflexive":
            if any(not rel.contains(w, w) for w in range(n)):
                return False
        elif cond == "symmetric":
            for w in range(n):
                for w2 in _bits_to_set(rel.rows[w]):
                    if not rel.contains(w2, w):
                        return False
        elif cond == "transitive":
            for w in range(n):
                for w2 in _bits_to_set(rel.rows[w]):
                    if rel.rows[w2] & ~rel.rows[w]:
                        return False
        else:
            raise KripkeError(f"unknown frame condition {cond!r}")
    return True


# ---------------------------------------------------------------------------
# Epistemic actions (the update vocabulary of an agent's internal state)


@dataclass(frozen=True)
class Refine:
    evidence: object  # world predicate


@dataclass(frozen=True)
class Revise:
    target: object  # world predicate


@dataclass(frozen=True)
class Explore:
    pass


@dataclass(frozen=True)
class Broadcast:
    payload: object = None


@dataclass(frozen=True)
class Hold:
    pass


def apply_action(rel: Accessibility, action, actual: int,
                 conditions: tuple = ()) -> Accessibility:
    """Internal transition map: relation x epistemic action -> relation."""
    if isinstance(action, Refine):
        return apply_refine(rel, action.evidence)
    if isinstance(action, Revise):
        return apply_revise(rel, action.target, actual, conditions)
    if isinstance(action, (Explore, Broadcast, Hold)):
        return rel
    raise KripkeError(f"unknown epistemic action {action!r}")


# ---------------------------------------------------------------------------
# Grid-world fixture (two agents on a three-cell strip)

_GRID_LABELS = ("HHH", "HBH", "BHH", "BBH", "HHB", "HBB", "BHB", "BBB")


def grid_world_fixture() -> tuple[KripkeModel, int]:
    """Eight-world model of a 3-cell strip observed by two agents.

    Each cell is white (H) or black (B); agent 1 sees cell 1, agent 2 sees
    cell 3, so each agent's relation is the partition of worlds by the color
    of its own cell.  Returns the model and the actual world id (HBH).
    """
    worlds = [World(i, lab) for i, lab in enumerate(_GRID_LABELS)]
    valuation = {}
    for i, lab in enumerate(_GRID_LABELS):
        atoms = {f"{lab[c]}{c + 1}" for c in range(3)}
        valuation[i] = frozenset(atoms)
    by_cell1 = {}
    by_cell3 = {}
    for i, lab in enumerate(_GRID_LABELS):
        by_cell1.setdefault(lab[0], []).append(i)
        by_cell3.setdefault(lab[2], []).append(i)
    relations = {
        1: relation_from_partition(1, by_cell1.values()),
        2: relation_from_partition(2, by_cell3.values()),
    }
    model = KripkeModel(worlds, valuation, relations,
                        conditions=("reflexive", "transitive", "symmetric"))
    return model, model.world_by_label("HBH")


def atom_predicate(model: KripkeModel, atom: str):
    return lambda w: atom in model.valuation[w]


def revise_keeping_knowledge(model: KripkeModel, rel: Accessibility, target,
                             actual: int, conditions: tuple = ()) -> Accessibility:
    """Revise to the target while retaining prior knowledge that survives it.

    Atoms known before the update (true in every accessible world) are kept
    whenever some target world still satisfies them; the new accessible set
    is the target set filtered by those retained atoms.  This realises the
    minimal-change reading of a belief revision triggered by evidence that
    contradicts only part of what the agent knew.
    """
    n = rel.n_worlds
    target_ids = [w for w in range(n) if target(w)]
    if not target_ids:
        raise UnsatisfiableTargetError("no world satisfies the revise target")
    old = rel.accessible_from(actual)
    known = set.intersection(*(set(model.valuation[w]) for w in old)) if old else set()
    retained = {a for a in known if any(a in model.valuation[w] for w in target_ids)}
    composed = [w for w in target_ids if retained <= set(model.valuation[w])]
    keep = set(composed)
    return apply_revise(rel, lambda w: w in keep, actual, conditions)


def replay_examples():
    """Replay the grid-world walkthrough: observe, refine on messages, then
    revise after the cell-3 stressor.  Returns the staged relations and the
    actual worlds, keyed by stage name.
    """
    model, actual = grid_world_fixture()
    r1, r2 = model.relations[1], model.relations[2]

    # Stage 1: each agent refines on the other's broadcast knowledge.
    r1b = apply_refine(r1, atom_predicate(model, "H3"))
    r2b = apply_refine(r2, atom_predicate(model, "H1"))

    # Stage 2: cell 3 flips to black; the actual world becomes HBB.
    actual2 = model.world_by_label("HBB")
    r2c = revise_keeping_knowledge(model, r2b, atom_predicate(model, "B3"), actual2)
    r1c = revise_keeping_knowledge(model, r1b, atom_predicate(model, "B3"), actual2)

    return {
        "model": model,
        "t0": {"actual": actual, 1: r1, 2: r2},
        "t1": {"actual": actual, 1: r1b, 2: r2b},
        "t2": {"actual": actual2, 1: r1c, 2: r2c},
    }


# ---------------------------------------------------------------------------
# Trace over a fixed model: per-step actual world and relations


class KripkeTrace:
    """Time-indexed run over one Kripke model.

    Steps carry the actual world and the per-agent relations in force at
    that time; the valuation is shared.  Implements the trace protocol the
    logic evaluator expects.
    """

    def __init__(self, model: KripkeModel, steps):
        # steps: list of (actual world id, {agent: Accessibility})
        self.model = model
        self.steps = list(steps)

    @property
    def length(self) -> int:
        return len(self.steps)

    def actual_world(self, t: int) -> int:
        return self.steps[t][0]

    def atoms_of(self, w: int):
        return self.model.valuation[w]

    def accessible(self, agent: int, w: int, t: int):
        return self.steps[t][1][agent].accessible_from(w)

    def has_atom(self, name: str) -> bool:
        return name in self.model.atoms

    def has_agent(self, agent: int) -> bool:
        return agent in self.steps[0][1]


def dump_model(model: KripkeModel, actual: int | None = None) -> str:
    """Plain-text dump: world list, valuation lines, relation lines."""
    lines = ["worlds: " + ",".join(w.label for w in model.worlds)]
    if actual is not None:
        lines.append(f"actual: {model.worlds[actual].label}")
    for w in model.worlds:
        lines.append(f"{w.label}: " + ",".join(sorted(model.valuation[w.id])))
    for agent in model.agents:
        rel = model.relations[agent]
        for w in model.worlds:
            for w2 in sorted(rel.accessible_from(w.id)):
                lines.append(f"agent {agent}: {w.label} -> {model.worlds[w2].label}")
    return "\n".join(lines) + "\n"
