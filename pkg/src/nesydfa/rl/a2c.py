"""Advantage actor-critic for reward-machine (RM), neural-reward-machine (NRM) and recurrent agents.

All three share the actor-critic network and update rule and differ only in
the memory concatenated to the observation:

* ``rm``: one-hot of the true automaton state (privileged labeling),
* ``nrm``: DeepDFA belief driven by a learned grounder of observations,
* ``rnn``: hidden state of a tanh recurrent cell trained through the A2C loss.

Rollouts run without a graph; each finished episode is consumed immediately
by one on-policy update, after which (NRM only) the grounder may be refit on
the recent replay window.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import deepdfa as D
from .. import tensor as T
from ..automata import MooreMachine
from ..sssg.model import Grounder
from ..tensor import Adam, Tensor
from ..tensor.nn import Linear
from .env import ACTIONS, GridWorld

AGENTS = ("nrm", "rm", "rnn")


class ConfigError(ValueError):
    pass


@dataclass
class A2cConfig:
    gamma: float = 0.99
    lr_actor: float = 7e-4
    lr_critic: float = 7e-4
    lr_grounder: float = 1e-3
    n_step: int | None = None  # None: Monte-Carlo return over the whole episode
    entropy: float = 0.01
    value_coef: float = 0.5
    grounder_every: int = 10
    grounder_window: int = 50
    grounder_steps: int = 20
    episodes: int = 5000
    seed: int = 0
    hidden: int = 64
    rnn_hidden: int = 32
    reward_scale: float = 0.01  # rewards are multiplied by this inside the loss only

    def validate(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        for name in ("lr_actor", "lr_critic", "lr_grounder", "reward_scale"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("grounder_every", "grounder_window", "grounder_steps", "episodes", "hidden", "rnn_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.n_step is not None and self.n_step < 1:
            raise ConfigError("n_step must be at least 1 (or null for full episodes)")
        if self.entropy < 0 or self.value_coef < 0:
            raise ConfigError("loss coefficients must be non-negative")


@dataclass
class Episode:
    cells: np.ndarray  # (T+1,) cell index of s(0..T)
    obs: np.ndarray  # (T+1, 2)
    actions: np.ndarray  # (T,)
    rewards: np.ndarray  # (T,)
    outputs: np.ndarray  # (T,) output class of the machine after each step
    states: np.ndarray  # (T+1,) true machine states (evaluation only)
    inputs: np.ndarray  # (T+1, d) policy inputs as used during the rollout
    grounder_version: int = 0

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def total_reward(self) -> float:
        return float(self.rewards.sum())


# ---------------------------------------------------------------- networks

class ActorCritic:
    """Two tanh layers shared by a linear actor head and a linear critic head."""

    def __init__(self, n_in: int, n_actions: int, hidden: int, rng: np.random.Generator):
        self.l1 = Linear(n_in, hidden, rng, name="trunk.0")
        self.l2 = Linear(hidden, hidden, rng, name="trunk.1")
        self.actor = Linear(hidden, n_actions, rng, name="actor", gain=0.01)
        self.critic = Linear(hidden, 1, rng, name="critic")

    def __call__(self, x: Tensor) -> tuple[Tensor, Tensor]:
        h = T.tanh(self.l2(T.tanh(self.l1(x))))
        return self.actor(h), self.critic(h)

    def forward_np(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = np.tanh(self.l2.forward_np(np.tanh(self.l1.forward_np(x))))
        return self.actor.forward_np(h), self.critic.forward_np(h)

    def actor_parameters(self) -> list[Tensor]:
        return self.l1.parameters() + self.l2.parameters() + self.actor.parameters()

    def critic_parameters(self) -> list[Tensor]:
        return self.critic.parameters()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.data for p in self.actor_parameters() + self.critic_parameters()}


class RnnCell:
    """``h' = tanh(x W_x + h W_h + b)``."""

    def __init__(self, n_in: int, hidden: int, rng: np.random.Generator):
        self.inp = Linear(n_in, hidden, rng, name="rnn.in")
        lim = 1.0 / math.sqrt(hidden)
        self.rec = Tensor(rng.uniform(-lim, lim, (hidden, hidden)), requires_grad=True, name="rnn.rec")
        self.hidden = hidden

    def step_np(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        return np.tanh(self.inp.forward_np(x[None])[0] + h @ self.rec.data)

    def unroll(self, xs: np.ndarray) -> Tensor:
        """Hidden states (T, H) for inputs (T, n_in) starting from zeros, as one graph."""
        pre = self.inp(Tensor(xs))
        h = Tensor(np.zeros((1, self.hidden)))
        rows = []
        for t in range(xs.shape[0]):
            h = T.tanh(T.add(pre[t:t + 1], T.matmul(h, self.rec)))
            rows.append(h)
        return T.concat(rows, axis=0)

    def parameters(self) -> list[Tensor]:
        return self.inp.parameters() + [self.rec]


# ---------------------------------------------------------------- agents

def nrm_agent_step(grounder, dfa: D.DeepDfa, s: np.ndarray, q: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Advance the belief with the grounded symbol distribution of ``s``; policy input = ``[s, q']``."""
    sig = grounder.predict(np.asarray(s, dtype=np.float64)[None])[0]
    q_next = D.belief_step(dfa, q, sig)
    return np.concatenate([s, q_next]), q_next


class _Agent:
    kind = ""

    def __init__(self, env: GridWorld, cfg: A2cConfig, rng: np.random.Generator, mem_dim: int):
        self.env = env
        self.cfg = cfg
        self.net = ActorCritic(2 + mem_dim, len(ACTIONS), cfg.hidden, rng)
        self.grounder_version = 0

    def begin(self):
        raise NotImplementedError

    def advance(self, mem, obs: np.ndarray, cell: int):
        raise NotImplementedError

    def features(self, obs: np.ndarray, mem) -> np.ndarray:
        return np.concatenate([obs, mem])

    def policy_inputs(self, ep: Episode) -> Tensor:
        return Tensor(ep.inputs[:-1])

    def parameters(self) -> list[Tensor]:
        return self.net.actor_parameters() + self.net.critic_parameters()


class RmAgent(_Agent):
    kind = "rm"

    def __init__(self, env, cfg, rng):
        super().__init__(env, cfg, rng, env.machine.n_states)
        self.eye = np.eye(env.machine.n_states)

    def begin(self):
        return self.eye[self.env.q]

    def advance(self, mem, obs, cell):
        return self.eye[self.env.q]


class NrmAgent(_Agent):
    kind = "nrm"

    def __init__(self, env, cfg, rng, grounder=None):
        super().__init__(env, cfg, rng, env.machine.n_states)
        self.dfa = D.inject(env.machine)
        self.grounder = grounder or Grounder([2, 64, 64, len(env.alphabet)], rng)
        self.opt = Adam(self.grounder.parameters(), lr=cfg.lr_grounder) if self.grounder.parameters() else None
        self._mu, self._trans, _ = self.dfa.matrices()
        self.refresh()

    def refresh(self) -> None:
        """Cache grounder outputs per cell (observations are cell centres)."""
        self.cell_sig = self.grounder.predict(self.env.cell_obs)
        self._succ = np.einsum("cs,sqr->cqr", self.cell_sig, self._trans)  # per-cell belief map

    def begin(self):
        return self._mu.copy()

    def advance(self, mem, obs, cell):
        return mem @ self._succ[cell]


class RnnAgent(_Agent):
    kind = "rnn"

    def __init__(self, env, cfg, rng):
        super().__init__(env, cfg, rng, cfg.rnn_hidden)
        self.cell = RnnCell(2, cfg.rnn_hidden, rng)
        self._h0 = np.zeros(cfg.rnn_hidden)

    def begin(self):
        return self.cell.step_np(self.env.observe(), self._h0)

    def advance(self, mem, obs, cell):
        return self.cell.step_np(obs, mem)

    def policy_inputs(self, ep: Episode) -> Tensor:
        h = self.cell.unroll(ep.obs[:-1])
        return T.concat([Tensor(ep.obs[:-1]), h], axis=1)

    def parameters(self) -> list[Tensor]:
        return super().parameters() + self.cell.parameters()


def make_agent(kind: str, env: GridWorld, cfg: A2cConfig, rng: np.random.Generator, grounder=None) -> _Agent:
    if kind == "rm":
        return RmAgent(env, cfg, rng)
    if kind == "nrm":
        return NrmAgent(env, cfg, rng, grounder)
    if kind == "rnn":
        return RnnAgent(env, cfg, rng)
    raise ConfigError(f"unknown agent {kind!r}; supported on-policy agents: {', '.join(AGENTS)}")


# ---------------------------------------------------------------- rollout and updates

def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def rollout(agent: _Agent, rng: np.random.Generator, greedy: bool = False) -> Episode:
    env = agent.env
    obs = env.reset()
    mem = agent.begin()
    cells, obs_l, acts, rews, outs, states, inputs = [env.cell()], [obs], [], [], [], [env.q], []
    done = False
    while not done:
        x = agent.features(obs, mem)
        inputs.append(x)
        logits, _ = agent.net.forward_np(x[None])
        p = _softmax(logits[0])
        a = int(p.argmax()) if greedy else int(rng.choice(len(p), p=p))
        obs, r, o, done = env.step(a)
        mem = agent.advance(mem, obs, env.cell())
        cells.append(env.cell())
        obs_l.append(obs)
        acts.append(a)
        rews.append(r)
        outs.append(o)
        states.append(env.q)
    inputs.append(agent.features(obs, mem))
    return Episode(np.array(cells), np.array(obs_l), np.array(acts), np.array(rews, dtype=np.float64),
                   np.array(outs), np.array(states), np.array(inputs), agent.grounder_version)


def returns(rewards: np.ndarray, gamma: float, values: np.ndarray | None = None,
            n_step: int | None = None) -> np.ndarray:
    """Discounted returns; with ``n_step`` they bootstrap from ``values`` (T+1,) after n steps."""
    t_len = len(rewards)
    if n_step is None or n_step >= t_len:
        out = np.empty(t_len)
        acc = 0.0
        for t in range(t_len - 1, -1, -1):
            acc = rewards[t] + gamma * acc
            out[t] = acc
        return out
    out = np.empty(t_len)
    for t in range(t_len):
        end = min(t + n_step, t_len)
        g = sum(gamma ** (k - t) * rewards[k] for k in range(t, end))
        if end < t_len:
            g += gamma ** (end - t) * values[end]
        out[t] = g
    return out


def a2c_update(agent: _Agent, ep: Episode, opt_actor: Adam, opt_critic: Adam, cfg: A2cConfig) -> dict:
    if ep.grounder_version != agent.grounder_version:
        raise AssertionError("on-policy violation: episode predates the current grounder")
    x = agent.policy_inputs(ep)
    logits, values = agent.net(x)
    v = T.reshape(values, (ep.length,))
    v_np = np.append(v.data, 0.0)
    target = returns(ep.rewards * cfg.reward_scale, cfg.gamma, v_np, cfg.n_step)
    adv = target - v.data
    logp = T.log_softmax(logits)
    probs = T.exp(logp)
    chosen = T.gather(logp, ep.actions)
    policy_loss = T.neg(T.mean(T.mul(chosen, Tensor(adv))))
    err = T.add(v, Tensor(-target))
    value_loss = T.mean(T.mul(err, err))
    entropy = T.neg(T.mean(T.sum(T.mul(probs, logp), axis=1)))
    loss = T.add(T.add(policy_loss, T.scale(value_loss, cfg.value_coef)), T.scale(entropy, -cfg.entropy))
    opt_actor.zero_grad()
    opt_critic.zero_grad()
    loss.backward()
    opt_actor.step()
    opt_critic.step()
    return {"loss": loss.item(), "entropy": entropy.item()}


def grounder_loss(agent: NrmAgent, replay: list[Episode]) -> Tensor:
    """Mean per-step cross-entropy between DeepDFA outputs and the observed output classes."""
    if not replay:
        raise ValueError("grounder update needs at least one episode")
    t_max = max(ep.length for ep in replay)
    n = len(replay)
    cells = np.zeros((n, t_max), dtype=np.int64)
    targets = np.zeros((n, t_max), dtype=np.int64)
    mask = np.zeros((n, t_max))
    for i, ep in enumerate(replay):
        cells[i, :ep.length] = ep.cells[1:]
        targets[i, :ep.length] = ep.outputs
        mask[i, :ep.length] = 1.0
    table = agent.grounder(Tensor(agent.env.cell_obs))
    _, o = D.forward_batch(agent.dfa, table[cells])
    flat = T.reshape(o, (n * t_max, o.shape[2]))
    return T.cross_entropy(flat, targets.reshape(-1), weights=mask.reshape(-1))


def grounder_update(agent: NrmAgent, replay: list[Episode], steps: int = 1) -> float:
    before = agent.dfa.checksum()
    value = float("nan")
    for _ in range(steps):
        loss = grounder_loss(agent, replay)
        value = loss.item()
        if not math.isfinite(value):
            raise FloatingPointError(f"non-finite grounder loss {value}")
        agent.opt.zero_grad()
        loss.backward()
        agent.opt.step()
    if agent.dfa.checksum() != before:
        raise AssertionError("grounder update modified the injected automaton")
    agent.grounder_version += 1
    agent.refresh()
    return value


# ---------------------------------------------------------------- labeling accuracy

def symbol_classes(m: MooreMachine) -> np.ndarray:
    """Class id per symbol; symbols with identical transition columns share a class."""
    cols = {}
    return np.array([cols.setdefault(m.delta[:, s].tobytes(), len(cols)) for s in range(m.n_symbols)])


def _same_behaviour(m: MooreMachine, perm: tuple[int, ...]) -> bool:
    """Does relabelling symbol ``s`` as ``perm[s]`` leave every output sequence unchanged?"""
    start = (m.initial, m.initial)
    seen, stack = {start}, [start]
    while stack:
        a, b = stack.pop()
        if m.output_of[a] != m.output_of[b]:
            return False
        for s in range(m.n_symbols):
            nxt = (int(m.delta[a, s]), int(m.delta[b, perm[s]]))
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return True


def consistent_permutations(m: MooreMachine) -> list[tuple[int, ...]]:
    return [p for p in itertools.permutations(range(m.n_symbols)) if _same_behaviour(m, p)]


def labeling_accuracy(pred: np.ndarray, true: np.ndarray, m: MooreMachine,
                      perms: list[tuple[int, ...]] | None = None) -> float:
    """Best fraction of cells whose predicted symbol matches the true one up to machine symmetries.

    Symbols the machine cannot tell apart (identical transition columns) count
    as equal, and any symbol permutation that preserves every output sequence
    may be applied to the predictions.
    """
    if len(true) == 0:
        return float("nan")
    cls = symbol_classes(m)
    best = 0.0
    for p in perms if perms is not None else consistent_permutations(m):
        mapped = np.asarray(p)[pred]
        best = max(best, float(np.mean(cls[mapped] == cls[true])))
    return best


# ---------------------------------------------------------------- training loop

@dataclass
class TrainResult:
    kind: str
    rewards: list[float] = field(default_factory=list)
    lengths: list[int] = field(default_factory=list)
    grounder_loss: list[float] = field(default_factory=list)
    labeling_acc: list[float] = field(default_factory=list)
    agent: _Agent | None = None
    updates: int = 0
    grounder_updates: int = 0

    def final_mean(self, last: int = 100) -> float:
        return float(np.mean(self.rewards[-last:]))


def a2c_train(kind: str, env_factory: Callable[[], GridWorld] | GridWorld, cfg: A2cConfig,
              grounder=None, callback: Callable[[int, Episode, TrainResult], None] | None = None
              ) -> TrainResult:
    cfg.validate()
    env = env_factory() if callable(env_factory) else env_factory
    init_seq, act_seq = np.random.SeedSequence([cfg.seed, AGENTS.index(kind) if kind in AGENTS else 99]).spawn(2)
    agent = make_agent(kind, env, cfg, np.random.default_rng(init_seq), grounder)
    rng = np.random.default_rng(act_seq)
    critic = agent.net.critic_parameters()
    opt_actor = Adam([p for p in agent.parameters() if all(p is not c for c in critic)], lr=cfg.lr_actor)
    opt_critic = Adam(critic, lr=cfg.lr_critic)
    res = TrainResult(kind, agent=agent)
    replay: list[Episode] = []
    perms = consistent_permutations(env.machine) if kind == "nrm" else None
    g_loss, l_acc = float("nan"), float("nan")
    for episode in range(1, cfg.episodes + 1):
        ep = rollout(agent, rng)
        a2c_update(agent, ep, opt_actor, opt_critic, cfg)
        res.updates += 1
        if kind == "nrm":
            replay.append(ep)
            if len(replay) > cfg.grounder_window:
                replay.pop(0)
            if episode % cfg.grounder_every == 0 and agent.opt is not None:
                g_loss = grounder_update(agent, replay, cfg.grounder_steps)
                res.grounder_updates += 1
                visited = np.unique(np.concatenate([e.cells for e in replay]))
                pred = agent.cell_sig.argmax(axis=1)
                l_acc = labeling_accuracy(pred[visited], env.cell_symbols[visited], env.machine, perms)
        res.rewards.append(ep.total_reward)
        res.lengths.append(ep.length)
        res.grounder_loss.append(g_loss)
        res.labeling_acc.append(l_acc)
        if callback is not None:
            callback(episode, ep, res)
    return res
