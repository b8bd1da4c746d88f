"""Gridworld with items whose visits drive a task automaton."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..automata import MooreMachine, RewardLabeling, label_rewards
from ..ltlf.dfa import Dfa
from .tasks import GRID_ALPHABET, ITEMS, task_dfa

ACTIONS = ("up", "down", "left", "right")
_MOVES = np.array([(0, 1), (0, -1), (-1, 0), (1, 0)])
EMPTY = "E"


class EpisodeOver(RuntimeError):
    pass


@dataclass
class Layout:
    width: int
    height: int
    start: tuple[int, int]
    items: dict[tuple[int, int], str]

    def symbol_at(self, pos: tuple[int, int]) -> str:
        return self.items.get(pos, EMPTY)

    def cells(self) -> list[tuple[int, int]]:
        return [(x, y) for y in range(self.height) for x in range(self.width)]

    def cell_index(self, pos: tuple[int, int]) -> int:
        return pos[1] * self.width + pos[0]

    @classmethod
    def random(cls, seed: int, width: int = 5, height: int = 5, items=ITEMS) -> "Layout":
        """Start in a corner, one cell per item, placed uniformly among the other cells."""
        rng = np.random.default_rng([seed, 0x6D63])
        start = (0, 0)
        cells = [(x, y) for y in range(height) for x in range(width) if (x, y) != start]
        picks = rng.choice(len(cells), size=len(items), replace=False)
        return cls(width, height, start, {cells[int(i)]: s for i, s in zip(picks, items)})


@dataclass
class GridWorld:
    layout: Layout
    machine: MooreMachine
    labeling: RewardLabeling
    horizon: int = 60
    pos: tuple[int, int] = (0, 0)
    q: int = 0
    t: int = 0
    done: bool = True
    alphabet: tuple[str, ...] = GRID_ALPHABET
    _sym_index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if tuple(self.machine.alphabet) != tuple(self.alphabet):
            raise ValueError("machine alphabet differs from the world alphabet")
        self._sym_index = {s: i for i, s in enumerate(self.alphabet)}
        # ground-truth labels per cell, as symbol indices
        self.cell_symbols = np.array([self._sym_index[self.layout.symbol_at(c)] for c in self.layout.cells()])
        cells = self.layout.cells()
        self.cell_obs = np.array([self._normalize(c) for c in cells])

    @classmethod
    def for_task(cls, task_id: str, scheme: str = "dense", seed: int = 0, width: int = 5,
                 height: int = 5, horizon: int = 60, scale: float = 100.0) -> "GridWorld":
        return cls.from_dfa(task_dfa(task_id), scheme, seed, width, height, horizon, scale)

    @classmethod
    def from_dfa(cls, d: Dfa, scheme: str = "dense", seed: int = 0, width: int = 5, height: int = 5,
                 horizon: int = 60, scale: float = 100.0, layout: Layout | None = None) -> "GridWorld":
        machine, lab = label_rewards(d, scheme, scale)
        layout = layout or Layout.random(seed, width, height)
        return cls(layout, machine, lab, horizon)

    @property
    def n_cells(self) -> int:
        return self.layout.width * self.layout.height

    def _normalize(self, pos) -> np.ndarray:
        return np.array([pos[0] / max(1, self.layout.width - 1), pos[1] / max(1, self.layout.height - 1)])

    def observe(self) -> np.ndarray:
        return self._normalize(self.pos)

    def cell(self) -> int:
        return self.layout.cell_index(self.pos)

    def reset(self) -> np.ndarray:
        self.pos = self.layout.start
        self.q = self.machine.initial
        self.t = 0
        self.done = False
        return self.observe()

    def step(self, action: int) -> tuple[np.ndarray, float, int, bool]:
        """Move, read the label of the new cell, advance the hidden machine.

        Returns ``(observation, reward, output class, done)``.
        """
        if self.done:
            raise EpisodeOver("step() called on a finished episode; call reset()")
        dx, dy = _MOVES[action]
        x = min(max(self.pos[0] + int(dx), 0), self.layout.width - 1)
        y = min(max(self.pos[1] + int(dy), 0), self.layout.height - 1)
        self.pos = (x, y)
        sym = int(self.cell_symbols[self.cell()])
        q_next = int(self.machine.delta[self.q, sym])
        reward = self.labeling.reward(self.q, q_next)
        self.q = q_next
        self.t += 1
        self.done = self.labeling.is_terminal(q_next) or self.t >= self.horizon
        return self.observe(), reward, int(self.machine.output_of[q_next]), self.done
