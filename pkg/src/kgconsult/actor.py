"""Question-asking policy trained with REINFORCE.

The actor maps the 3k observation to a distribution over symptoms. Episodes
are collected by a frozen snapshot with teacher forcing that decays on a
fixed geometric schedule; transitions (observation, action, episode return)
go through a bounded FIFO replay buffer, and the live actor takes one
whole-return policy-gradient step per collected episode once the buffer
holds enough data.
"""

from __future__ import annotations

import logging
import threading
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import nn
from .embedding import EmbeddingTable
from .environment import ConsultEnv, EpisodeState
from .graph import KnowledgeGraph

log = logging.getLogger(__name__)

PAPER_TOTAL_EPISODES = 250000
PAPER_DECAY_EVERY = 50


@dataclass
class ActorModel:
    net: nn.Mlp3
    symptom_ids: np.ndarray  # output position -> symptom id, ascending

    def __post_init__(self):
        if self.net.head != nn.SOFTMAX:
            raise ValueError("actor net must use a softmax head")
        if self.net.d_out != len(self.symptom_ids):
            raise ValueError("output width must equal the number of symptoms")
        self._position = {int(s): i for i, s in enumerate(self.symptom_ids)}

    def position_of(self, symptom_id: int) -> int:
        return self._position[int(symptom_id)]

    def copy(self) -> "ActorModel":
        return ActorModel(self.net.copy(), self.symptom_ids.copy())


@dataclass
class Transition:
    obs: np.ndarray
    action: int
    ret: float  # whole-episode return, shared by all transitions of the episode


class BufferUnderfilled(RuntimeError):
    """Sampling refused until the buffer reaches its minimum fill."""


class ReplayBuffer:
    """Bounded FIFO of transitions; insert and sample are thread-safe."""

    def __init__(self, capacity: int = 10000, min_fill: int = 100):
        if capacity < min_fill:
            raise ValueError("capacity must be >= min_fill")
        self.capacity = capacity
        self.min_fill = min_fill
        self._entries: deque[Transition] = deque(maxlen=capacity)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def insert(self, transitions) -> None:
        """Append in arrival order; the oldest entries fall off past capacity."""
        with self._lock:
            self._entries.extend(transitions)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform sample without replacement; refuses below min_fill."""
        with self._lock:
            n = len(self._entries)
            if n < self.min_fill:
                raise BufferUnderfilled(f"buffer holds {n} < min fill {self.min_fill}")
            take = min(batch_size, n)
            idx = rng.choice(n, size=take, replace=False)
            return [self._entries[i] for i in idx]

    def snapshot(self) -> list[Transition]:
        with self._lock:
            return list(self._entries)


@dataclass
class ShapingSchedule:
    """Teacher-forcing rate: starts at 1 and decays geometrically.

    rate(episode) = decay ** floor(episode / decay_every).
    """

    decay: float = 0.9995
    decay_every: int = PAPER_DECAY_EVERY
    total_episodes: int = PAPER_TOTAL_EPISODES

    def __post_init__(self):
        if not (0.0 < self.decay <= 1.0) or self.decay_every < 1:
            raise ValueError("decay must be in (0,1], decay_every >= 1")


def shaping_rate_at(sched: ShapingSchedule, episode_number: int) -> float:
    if episode_number < 0:
        raise ValueError("episode number must be >= 0")
    return sched.decay ** (episode_number // sched.decay_every)


def init_actor(
    graph: KnowledgeGraph, k: int, hidden: int, rng: np.random.Generator
) -> ActorModel:
    net = nn.init_mlp3(3 * k, hidden, graph.n_symptoms, nn.SOFTMAX, rng)
    return ActorModel(net=net, symptom_ids=graph.symptom_ids.copy())


def act(
    actor: ActorModel,
    obs_vec: np.ndarray,
    temperature: float = 1.0,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
) -> int:
    """Sample a symptom from softmax(logits / temperature), or argmax if greedy.

    Greedy ties resolve to the lowest symptom id.
    """
    _, cache = nn.forward(actor.net, np.asarray(obs_vec, dtype=np.float64))
    logits = cache.logits
    if greedy:
        return int(actor.symptom_ids[int(np.argmax(logits))])
    if temperature <= 0:
        raise ValueError("temperature must be > 0 (use greedy=True for the limit)")
    probs = nn.softmax(logits / temperature)
    pos = int(rng.choice(len(probs), p=probs))
    return int(actor.symptom_ids[pos])


def shaped_act(
    actor: ActorModel,
    obs_vec: np.ndarray,
    state: EpisodeState,
    rate: float,
    rng: np.random.Generator,
    temperature: float = 1.0,
) -> int:
    """Teacher action (uniform un-asked present symptom) with probability `rate`.

    Falls through to the actor when no teacher action remains or the coin
    says so.
    """
    if rate > 0 and rng.random() < rate:
        remaining = sorted(state.case.present_symptoms - set(state.asked))
        if remaining:
            return int(remaining[int(rng.integers(len(remaining)))])
    return act(actor, obs_vec, temperature=temperature, rng=rng)


def reinforce_update(
    actor: ActorModel,
    batch: list[Transition],
    lr: float,
    baseline: bool = False,
    grad_clip: float | None = None,
) -> tuple[ActorModel, float]:
    """One ascent step on mean G * log p(a|o) over the batch.

    grad_clip, when set, rescales the update so its global L2 norm cannot
    exceed the given value (numerical guard; leaves moderate steps exact).
    Returns the actor and the (descent) batch loss -mean(G log p).
    """
    if not batch:
        raise ValueError("empty batch")
    B = len(batch)
    X = np.stack([t.obs for t in batch])
    positions = np.array([actor.position_of(t.action) for t in batch])
    G = np.array([t.ret for t in batch], dtype=np.float64)
    if baseline:
        G = G - G.mean()

    probs, cache = nn.forward(actor.net, X)
    p_taken = np.maximum(probs[np.arange(B), positions], nn.EPS)
    loss = float(-(G * np.log(p_taken)).mean())
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite policy loss")

    d_logits = probs * G[:, None]
    d_logits[np.arange(B), positions] -= G
    d_logits /= B  # gradient of -mean(G log p) w.r.t. logits
    grads = nn.backward(actor.net, cache, d_logits)
    if grad_clip is not None:
        norm = np.sqrt(sum(float((g * g).sum()) for g in grads.params()))
        if norm > grad_clip:
            scale = grad_clip / norm
            for g in grads.params():
                g *= scale
    nn.sgd_step(actor.net, grads, lr)
    return actor, loss


@dataclass
class ActorTrainConfig:
    total_episodes: int = 20000  # desk-scale default; the paper setting is 250000
    lr: float = 1e-3
    temperature: float = 1.0
    capacity: int = 10000
    min_fill: int = 100
    batch_size: int = 20
    decay: float = 0.9995
    decay_every: int | None = None  # None: rescale 50/250000 to total_episodes
    drop_prob: float = 0.1
    max_steps: int = 30
    terminal_bonus: float = 5.0
    hidden: int = 256
    seed: int = 0
    fresh_only: bool = False  # bypass the buffer, train on each episode directly
    baseline: bool = False  # subtract the batch-mean return before the step
    grad_clip: float | None = None  # cap the update's global L2 norm
    watchdog_fraction: float | None = 0.5
    watchdog_episodes: int = 500

    def schedule(self) -> ShapingSchedule:
        every = self.decay_every
        if every is None:
            every = max(1, round(self.total_episodes * PAPER_DECAY_EVERY / PAPER_TOTAL_EPISODES))
        return ShapingSchedule(
            decay=self.decay, decay_every=every, total_episodes=self.total_episodes
        )


@dataclass
class EpisodeRecord:
    episode: int
    ret: float
    shaping_rate: float


def run_episode(
    env: ConsultEnv,
    actor: ActorModel,
    rng: np.random.Generator,
    rate: float = 0.0,
    temperature: float = 1.0,
) -> tuple[list[tuple[np.ndarray, int]], float]:
    """Collect one episode with the given shaping rate; returns (steps, return)."""
    state, obs = env.reset(rng)
    steps: list[tuple[np.ndarray, int]] = []
    total = 0.0
    while not state.done:
        action = shaped_act(actor, obs.vec, state, rate, rng, temperature)
        steps.append((obs.vec, action))
        result = env.step(state, action)
        total += result.reward
        obs = result.observation
    return steps, total


def _uniform_policy_return(
    env: ConsultEnv, graph: KnowledgeGraph, rng: np.random.Generator, episodes: int
) -> float:
    total = 0.0
    symptoms = graph.symptom_ids
    for _ in range(episodes):
        state, _ = env.reset(rng)
        while not state.done:
            action = int(symptoms[int(rng.integers(len(symptoms)))])
            total += env.step(state, action).reward
    return total / episodes


def train_actor(
    graph: KnowledgeGraph,
    tab: EmbeddingTable,
    diagnosis,
    decision,
    cfg: ActorTrainConfig,
    rng: np.random.Generator | None = None,
) -> tuple[ActorModel, list[EpisodeRecord]]:
    """Interleaved collect/train loop.

    A frozen snapshot collects one episode into the buffer, the live actor
    takes one sampled-batch update once the buffer passes its minimum fill,
    and the snapshot is then replaced by the updated weights. Single
    threaded on purpose: with this fixed interleaving the run is exactly
    reproducible per seed. A watchdog aborts with a diagnostic if, at the
    configured fraction of training, recent returns have not beaten a
    uniform-random question policy.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    env = ConsultEnv(
        graph,
        tab,
        diagnosis,
        decision,
        drop_prob=cfg.drop_prob,
        max_steps=cfg.max_steps,
        terminal_bonus=cfg.terminal_bonus,
    )
    actor = init_actor(graph, tab.k, cfg.hidden, rng)
    snapshot = actor.copy()
    buffer = ReplayBuffer(capacity=cfg.capacity, min_fill=cfg.min_fill)
    sched = cfg.schedule()
    history: list[EpisodeRecord] = []

    baseline_rng = rng.spawn(1)[0]
    watchdog_at = None
    if cfg.watchdog_fraction is not None and cfg.total_episodes > 0:
        watchdog_at = int(cfg.total_episodes * cfg.watchdog_fraction)

    for ep in range(cfg.total_episodes):
        rate = shaping_rate_at(sched, ep)
        steps, ret = run_episode(env, snapshot, rng, rate=rate, temperature=cfg.temperature)
        transitions = [Transition(obs=o, action=a, ret=ret) for o, a in steps]
        history.append(EpisodeRecord(episode=ep, ret=ret, shaping_rate=rate))

        if cfg.fresh_only:
            reinforce_update(actor, transitions, cfg.lr, baseline=cfg.baseline,
                             grad_clip=cfg.grad_clip)
            snapshot = actor.copy()
        else:
            buffer.insert(transitions)
            try:
                batch = buffer.sample(cfg.batch_size, rng)
            except BufferUnderfilled:
                continue
            reinforce_update(actor, batch, cfg.lr, baseline=cfg.baseline,
                             grad_clip=cfg.grad_clip)
            snapshot = actor.copy()

        if watchdog_at is not None and ep + 1 == watchdog_at:
            window = min(cfg.watchdog_episodes, len(history))
            recent = float(np.mean([h.ret for h in history[-window:]]))
            random_mean = _uniform_policy_return(env, graph, baseline_rng, 200)
            log.info(
                "watchdog at episode %d: recent mean return %.2f vs random %.2f",
                ep + 1, recent, random_mean,
            )
            if recent <= random_mean:
                raise RuntimeError(
                    f"actor training stalled: mean return {recent:.2f} over the last "
                    f"{window} episodes has not passed the uniform-random policy "
                    f"({random_mean:.2f}) after {ep + 1} episodes"
                )
        if (ep + 1) % 1000 == 0:
            recent = float(np.mean([h.ret for h in history[-500:]]))
            log.info(
                "actor episode %d/%d rate %.4f recent mean return %.2f",
                ep + 1, cfg.total_episodes, rate, recent,
            )
    return actor, history


def write_reward_curve(history: list[EpisodeRecord], path) -> None:
    """Dump the per-episode reward curve as episode,return,shaping_rate CSV."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("episode,return,shaping_rate\n")
        for rec in history:
            fh.write(f"{rec.episode},{rec.ret:.6g},{rec.shaping_rate:.10g}\n")
