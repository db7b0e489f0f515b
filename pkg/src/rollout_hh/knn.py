"""Distance-weighted k-nearest-neighbour regression with a spread estimate.

For a query ``q`` the k training points with the smallest Euclidean distance
give

    r_hat = sum(w_i * y_i) / sum(w_i),   w_i = 1 / (d_i + eps)
    sigma = population std of the k neighbour targets (unweighted)

Ties are broken by stored index.  Two squared distances count as tied when
they agree to a relative ``TIE_TOLERANCE``: identical states stored under
rules of equal frequency are at mathematically equal distances, and the last
bit of a float sum depends on summation order.  Concretely, with ``t`` the
k-th smallest squared distance, every point below ``t * (1 - tol)`` is kept
and the remaining slots go to the lowest-index points within
``t * (1 +/- tol)``.

The search is an exact linear scan.  Because every labeled state appears once
per candidate rule, the squared distance is split into a state part, computed
once per distinct stored state, and a one-hot part that takes one value per
distinct normalized one-hot block (at most 7).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import ContractError, ScheduleState
from .features import (NUM_FEATURES, NUM_STATE_FEATURES, Normalizer, fit_normalizer,
                       normalize, state_features, with_rule)
from .io import FORMAT_VERSION, atomic_write_bytes
from .labeling import LabeledSample, LabelKind, dataset_arrays
from .rules import ALL_RULES, NUM_RULES, Rule, parse_rule

DEFAULT_K = 7
DEFAULT_EPSILON = 1e-8
MAGIC = b"ROLLOUT_HH_KNN\n"
TIE_TOLERANCE = 1e-9


@dataclass(eq=False)
class SelectorModel:
    normalizer: Normalizer
    points: np.ndarray
    targets: np.ndarray
    k: int = DEFAULT_K
    epsilon: float = DEFAULT_EPSILON
    label_kind: LabelKind = LabelKind.REGRET
    default_rule: Rule = Rule.FIFO
    # search index, derived from points
    _states: np.ndarray = field(init=False, repr=False)
    _state_of: np.ndarray = field(init=False, repr=False)
    _blocks: np.ndarray = field(init=False, repr=False)
    _block_of: np.ndarray = field(init=False, repr=False)
    _block_members: list = field(init=False, repr=False)
    _block_reach: float = field(init=False, repr=False)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=float)
        self.targets = np.ascontiguousarray(self.targets, dtype=float)
        self.label_kind = LabelKind.parse(self.label_kind)
        self.default_rule = parse_rule(self.default_rule)
        n = len(self.targets)
        if self.points.shape != (n, NUM_FEATURES):
            raise ContractError(f"points must be ({n}, {NUM_FEATURES}), got {self.points.shape}")
        if self.k < 1:
            raise ContractError("k must be >= 1")
        if n < self.k:
            raise ContractError(f"need at least k={self.k} training points, got {n}")
        self._states, self._state_of = np.unique(
            self.points[:, :NUM_STATE_FEATURES], axis=0, return_inverse=True)
        self._blocks, self._block_of = np.unique(
            self.points[:, NUM_STATE_FEATURES:], axis=0, return_inverse=True)
        self._state_of = self._state_of.ravel()
        self._block_of = self._block_of.ravel()
        self._block_members = []
        for b in range(len(self._blocks)):
            members = np.flatnonzero(self._block_of == b)
            self._block_members.append((members, self._state_of[members]))
        # largest one-hot distance any query can see, used to widen the per-block cut
        queries = normalize(self.normalizer, np.hstack([np.zeros((NUM_RULES, NUM_STATE_FEATURES)),
                                                         np.eye(NUM_RULES)]))[:, NUM_STATE_FEATURES:]
        diff = self._blocks[:, None, :] - queries[None, :, :]
        self._block_reach = float(np.einsum("ijk,ijk->ij", diff, diff).max())

    def __len__(self) -> int:
        return len(self.targets)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self._params(), sort_keys=True).encode())
        for arr in (self.normalizer.mean, self.normalizer.std, self.points, self.targets):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()

    def _params(self) -> dict:
        return {"k": self.k, "epsilon": self.epsilon, "label_kind": self.label_kind.value,
                "default_rule": int(self.default_rule), "norm_epsilon": self.normalizer.epsilon,
                "n": len(self.targets), "dim": NUM_FEATURES}

    # -- queries --------------------------------------------------------------

    def _block_candidates(self, zs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per one-hot block, the stored points tied with or closer than the
        block's k-th nearest state.  Adding the block's one-hot distance is a
        shift shared by the whole block, so the global k nearest for any query
        rule are among these candidates.  The cut is widened by the tie
        tolerance so no point inside the final tie band is dropped."""
        ds = self._states - zs
        sd = np.einsum("ij,ij->i", ds, ds)
        pts, sq, blk = [], [], []
        for b, (members, states) in enumerate(self._block_members):
            s = sd[states]
            if len(s) > self.k:
                kth = np.partition(s, self.k - 1)[self.k - 1]
                sel = np.flatnonzero(s <= kth + TIE_TOLERANCE * (kth + self._block_reach))
                members, s = members[sel], s[sel]
            pts.append(members)
            sq.append(s)
            blk.append(np.full(len(members), b))
        return np.concatenate(pts), np.concatenate(sq), np.concatenate(blk)

    def _predict(self, cand, zb: np.ndarray) -> tuple[float, float]:
        pts, sq, blk = cand
        db = self._blocks - zb
        bd = np.einsum("ij,ij->i", db, db)
        d2 = sq + bd[blk]
        # sqrt is monotone, so neighbours are selected on squared distances
        t = np.partition(d2, self.k - 1)[self.k - 1]
        sure = np.flatnonzero(d2 < t * (1 - TIE_TOLERANCE))
        band = np.flatnonzero((d2 >= t * (1 - TIE_TOLERANCE)) & (d2 <= t * (1 + TIE_TOLERANCE)))
        band = band[np.argsort(pts[band], kind="stable")][:self.k - len(sure)]
        order = np.concatenate([sure, band])
        y = self.targets[pts[order]]
        w = 1.0 / (np.sqrt(d2[order]) + self.epsilon)
        return float(np.dot(w, y) / w.sum()), float(y.std())

    def predict_vector(self, raw: np.ndarray) -> tuple[float, float]:
        """(r_hat, sigma_hat) for an un-normalized 42-dim feature vector."""
        zq = normalize(self.normalizer, raw)
        cand = self._block_candidates(zq[:NUM_STATE_FEATURES])
        return self._predict(cand, zq[NUM_STATE_FEATURES:])

    def predict_state_vector(self, svec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Predictions for all rules sharing one 35-dim state vector."""
        r_hat = np.empty(NUM_RULES)
        sigma = np.empty(NUM_RULES)
        zs = normalize(self.normalizer, with_rule(svec, 0))[:NUM_STATE_FEATURES]
        cand = self._block_candidates(zs)
        for r in ALL_RULES:
            zb = normalize(self.normalizer, with_rule(svec, r))[NUM_STATE_FEATURES:]
            r_hat[r], sigma[r] = self._predict(cand, zb)
        return r_hat, sigma


def fit_arrays(
    X: np.ndarray,
    y: np.ndarray,
    k: int = DEFAULT_K,
    epsilon: float = DEFAULT_EPSILON,
    default_rule: Rule | int | str = Rule.FIFO,
    label_kind: LabelKind | str = LabelKind.REGRET,
) -> SelectorModel:
    X = np.asarray(X, dtype=float)
    if len(X) < k:
        raise ContractError(f"dataset has {len(X)} samples, fewer than k={k}")
    norm = fit_normalizer(X)
    Z = normalize(norm, X)
    return SelectorModel(norm, Z, np.asarray(y, dtype=float), k, epsilon, label_kind, default_rule)


def fit(
    dataset: Sequence[LabeledSample],
    k: int = DEFAULT_K,
    epsilon: float = DEFAULT_EPSILON,
    default_rule: Rule | int | str = Rule.FIFO,
    label_kind: LabelKind | str = LabelKind.REGRET,
) -> SelectorModel:
    """Normalize the feature vectors and store them with their targets."""
    if len(dataset) < k:
        raise ContractError(f"dataset has {len(dataset)} samples, fewer than k={k}")
    X, y = dataset_arrays(dataset)
    return fit_arrays(X, y, k, epsilon, default_rule, label_kind)


def predict(model: SelectorModel, state: ScheduleState, rule: Rule | int) -> tuple[float, float]:
    return model.predict_vector(with_rule(state_features(state), rule))


def predict_all(model: SelectorModel, state: ScheduleState) -> dict[Rule, tuple[float, float]]:
    r_hat, sigma = model.predict_state_vector(state_features(state))
    return {r: (float(r_hat[r]), float(sigma[r])) for r in ALL_RULES}


# -- persistence ----------------------------------------------------------------

def model_to_bytes(model: SelectorModel, echo: dict | None = None) -> bytes:
    """Magic line, one JSON header line, then little-endian float64 arrays:
    normalizer mean, normalizer std, points (row-major), targets."""
    header = {"format": "rollout_hh.knn", "version": FORMAT_VERSION, **model._params(),
              "config": echo or {}}
    head = json.dumps(header, sort_keys=True).encode() + b"\n"
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in (
        model.normalizer.mean, model.normalizer.std, model.points, model.targets))
    return MAGIC + head + body


def save_model(path: str | Path, model: SelectorModel, echo: dict | None = None) -> None:
    atomic_write_bytes(path, model_to_bytes(model, echo))


def model_from_bytes(data: bytes) -> tuple[SelectorModel, dict]:
    if not data.startswith(MAGIC):
        raise ContractError("not a selector model file")
    rest = data[len(MAGIC):]
    nl = rest.index(b"\n")
    header = json.loads(rest[:nl])
    if header.get("version") != FORMAT_VERSION:
        raise ContractError(f"unsupported model version {header.get('version')}")
    n, dim = header["n"], header["dim"]
    if dim != NUM_FEATURES:
        raise ContractError(f"model dimension {dim} != {NUM_FEATURES}")
    arr = np.frombuffer(rest[nl + 1:], dtype="<f8")
    if arr.size != 2 * dim + n * dim + n:
        raise ContractError("model file is truncated or corrupt")
    mean, std = arr[:dim].copy(), arr[dim:2 * dim].copy()
    points = arr[2 * dim:2 * dim + n * dim].reshape(n, dim).copy()
    targets = arr[2 * dim + n * dim:].copy()
    model = SelectorModel(Normalizer(mean, std, header["norm_epsilon"]), points, targets,
                          header["k"], header["epsilon"], header["label_kind"],
                          Rule(header["default_rule"]))
    return model, header


def load_model(path: str | Path) -> SelectorModel:
    return model_from_bytes(Path(path).read_bytes())[0]
