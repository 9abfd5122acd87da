"""Adaptive sample dropping driven by mixture posteriors over losses.

After a warmup of untouched epochs, each epoch's per-sample losses (optionally
log1p-transformed, optionally averaged over a short trailing window) are fit
with BIC-selected Gaussian mixtures.  When more than one component is
selected, the component with the largest mean is read as the noisy
population; samples whose posterior for that component exceeds the threshold
collect consecutive-epoch flags, and a sample flagged `persistence` epochs in
a row is dropped permanently.  A single-component selection is treated as
"no noise evidence this epoch" and resets every counter.  Total drops never
exceed floor(max_drop_frac * initial train size); when candidates outnumber
the remaining budget, higher posterior wins and ties fall to the smaller id.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import gmm
from .errors import ConfigError, SequencingError, UsageError
from .trajectory import TRANSFORMS


@dataclass
class DropPolicy:
    warmup: int
    tau: float = 0.7
    persistence: int = 2
    max_drop_frac: float = 0.3
    k_max: int = 3
    transform: str = "log1p"
    window: int = 1

    def validate(self):
        if self.warmup < 0:
            raise ConfigError("warmup must be >= 0 epochs")
        if not (0.5 < self.tau <= 1.0):
            raise ConfigError(f"tau must lie in (0.5, 1], got {self.tau}")
        if self.persistence < 1:
            raise ConfigError("persistence must be >= 1")
        if not (0.0 <= self.max_drop_frac <= 1.0):
            raise ConfigError(
                f"max_drop_frac must lie in [0, 1], got {self.max_drop_frac}")
        if self.k_max < 1:
            raise ConfigError("k_max must be >= 1")
        if self.transform not in TRANSFORMS:
            raise ConfigError(f"transform must be one of {sorted(TRANSFORMS)}")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        return self


@dataclass
class DropState:
    initial_ids: tuple
    counters: dict = field(default_factory=dict)     # id -> consecutive flags
    windows: dict = field(default_factory=dict)      # id -> recent transformed losses
    dropped: dict = field(default_factory=dict)      # id -> epoch dropped at
    last_epoch: int = 0

    @classmethod
    def for_ids(cls, ids):
        ids = tuple(int(i) for i in ids)
        if len(set(ids)) != len(ids):
            raise UsageError("train sample ids must be unique")
        return cls(initial_ids=ids)

    def active_ids(self):
        return [i for i in self.initial_ids if i not in self.dropped]


@dataclass
class EpochDecision:
    epoch: int
    in_warmup: bool
    selected_k: int                    # 0 when no fit happened
    flagged: list                      # ids over threshold this epoch
    dropped: list                      # (id, posterior) pairs dropped this epoch
    gmm_trace: list                    # one dict per candidate K that was fit
    cap: int
    n_active: int


def drop_cap(policy, state):
    return int(np.floor(policy.max_drop_frac * len(state.initial_ids)))


def evaluate_epoch(state, policy, epoch, sample_ids, losses, seed=0):
    """Consume one epoch of losses and decide which samples to drop.

    sample_ids must be exactly the currently active set.  Epochs must arrive
    contiguously (1, 2, ...); warmup epochs only feed the trailing windows.
    Dropped ids take effect from the next epoch's active set.
    """
    policy.validate()
    if epoch != state.last_epoch + 1:
        raise SequencingError(f"expected epoch {state.last_epoch + 1}, got {epoch}")
    ids = [int(i) for i in sample_ids]
    vals = np.asarray(losses, dtype=np.float64)
    if len(ids) != vals.shape[0]:
        raise UsageError("sample_ids and losses must have matching lengths")
    if set(ids) != set(state.active_ids()):
        raise UsageError("sample_ids must match the active set exactly")
    state.last_epoch = epoch     # a rejected call must not consume the epoch

    transformed = TRANSFORMS[policy.transform](vals)
    for sid, x in zip(ids, transformed):
        window = state.windows.get(sid)
        if window is None:
            window = state.windows[sid] = deque(maxlen=policy.window)
        window.append(float(x))

    cap = drop_cap(policy, state)
    decision = EpochDecision(epoch=epoch, in_warmup=epoch <= policy.warmup,
                             selected_k=0, flagged=[], dropped=[], gmm_trace=[],
                             cap=cap, n_active=len(ids))
    if decision.in_warmup or not ids:
        return decision

    features = np.array([float(np.mean(state.windows[sid])) for sid in ids])
    model, trace = gmm.select_model(features, k_max=policy.k_max, seed=seed)
    decision.gmm_trace = trace
    decision.selected_k = model.k

    if model.k == 1:
        # No mixture evidence: treat the epoch as clean and restart persistence.
        state.counters.clear()
        return decision

    post = gmm.posteriors(model, features)[:, -1]   # component with largest mean
    posterior_by_id = {}
    for sid, p in zip(ids, post):
        posterior_by_id[sid] = float(p)
        if p > policy.tau:
            state.counters[sid] = state.counters.get(sid, 0) + 1
            decision.flagged.append(sid)
        else:
            state.counters.pop(sid, None)

    candidates = [sid for sid in ids
                  if state.counters.get(sid, 0) >= policy.persistence]
    budget = cap - len(state.dropped)
    if budget < len(candidates):
        candidates.sort(key=lambda sid: (-posterior_by_id[sid], sid))
        candidates = candidates[:max(budget, 0)]
    for sid in sorted(candidates):
        state.dropped[sid] = epoch
        state.counters.pop(sid, None)
        state.windows.pop(sid, None)
        decision.dropped.append((sid, posterior_by_id[sid]))
    return decision


def active_samples(state, samples):
    """Subset of samples still active, preserving the given order."""
    return [s for s in samples if int(s.id) not in state.dropped]
