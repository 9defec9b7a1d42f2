"""Rank-consistent ordinal regression math over externally produced logits.

A logit tensor holds, per fixation, K-1 conditional binary outputs whose
sigmoid gives P(rank > r_j | rank > r_{j-1}). The loss builds the chained
conditional subsets S_1 (all positions), S_j = {i : y_i > r_{j-1}} and
normalizes by the total subset size. Decoding multiplies the conditional
probabilities cumulatively and counts how many exceed 0.5; predictions are
clipped to the trial's maximum line index. Ranks are 1-based inside this
module only; decoded assignments come back 0-based.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMaxLineError, EmptyEnsembleError, ShapeMismatchError


@dataclass(frozen=True)
class LogitTensor:
    """(s, K-1) float logits plus a padding mask (True = real fixation)."""

    values: np.ndarray
    mask: np.ndarray
    trial_id: str = ""
    scheme: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ShapeMismatchError(f"logits must be (s >= 1, K-1 >= 1), got {values.shape}")
        if mask.shape != (values.shape[0],):
            raise ShapeMismatchError(f"mask shape {mask.shape} != ({values.shape[0]},)")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def k(self) -> int:
        return self.values.shape[1] + 1


def _check_targets(tensor: LogitTensor, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (tensor.values.shape[0],):
        raise ShapeMismatchError(f"targets shape {y.shape} != ({tensor.values.shape[0]},)")
    if np.any((y[tensor.mask] < 1) | (y[tensor.mask] > tensor.k)):
        raise ShapeMismatchError(f"targets must lie in 1..{tensor.k} at unmasked positions")
    return y


def _log_sigmoid(z: np.ndarray) -> np.ndarray:
    # -softplus(-z); stable for |z| > 30
    return -np.logaddexp(0.0, -z)


def _membership(tensor: LogitTensor, y: np.ndarray) -> np.ndarray:
    """Boolean (s, K-1) matrix: position i belongs to subset S_j."""
    ranks = np.arange(1, tensor.k)  # r_j for j = 1..K-1
    member = tensor.mask[:, None] & (y[:, None] > (ranks - 1)[None, :])
    member[:, 0] = tensor.mask  # S_1 has no condition
    return member


def corn_loss(tensor: LogitTensor, y: np.ndarray) -> float:
    """Conditional ordinal loss averaged over the total subset size."""
    y = _check_targets(tensor, y)
    member = _membership(tensor, y)
    total = int(member.sum())
    if total == 0:
        return 0.0
    ranks = np.arange(1, tensor.k)
    above = y[:, None] > ranks[None, :]
    z = tensor.values
    # log sigma(z) when the label is above the rank, log sigma(-z) otherwise
    terms = np.where(above, _log_sigmoid(z), _log_sigmoid(-z))
    return float(-(terms * member).sum() / total)


def corn_grad(tensor: LogitTensor, y: np.ndarray) -> np.ndarray:
    """Analytic d loss / d logits; exactly zero outside the subsets."""
    y = _check_targets(tensor, y)
    member = _membership(tensor, y)
    total = int(member.sum())
    grad = np.zeros_like(tensor.values)
    if total == 0:
        return grad
    ranks = np.arange(1, tensor.k)
    above = (y[:, None] > ranks[None, :]).astype(np.float64)
    sigma = _sigmoid(tensor.values)
    grad = np.where(member, (sigma - above) / total, 0.0)
    return grad


def _sigmoid(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=np.float64)))


def decode_q(values: np.ndarray) -> np.ndarray:
    """1-based predicted ranks from raw logits via cumulative conditionals."""
    cumulative = np.cumprod(_sigmoid(values), axis=1)
    return 1 + (cumulative > 0.5).sum(axis=1)


def corn_decode(tensor: LogitTensor, max_line: int) -> np.ndarray:
    """0-based line indices for unmasked positions, clipped below max_line."""
    if not 1 <= max_line <= tensor.k:
        raise BadMaxLineError(f"max_line {max_line} outside 1..{tensor.k}")
    q = decode_q(tensor.values)
    lines = np.minimum(q, max_line) - 1
    return lines[tensor.mask]


def ensemble_decode(tensors: list[LogitTensor], max_line: int) -> np.ndarray:
    """Element-wise mean of the member logits, then a single decode."""
    if not tensors:
        raise EmptyEnsembleError("ensemble needs at least one logit tensor")
    first = tensors[0]
    for t in tensors[1:]:
        if t.values.shape != first.values.shape:
            raise ShapeMismatchError(
                f"member shapes differ: {t.values.shape} vs {first.values.shape}"
            )
        if not np.array_equal(t.mask, first.mask):
            raise ShapeMismatchError("member masks differ")
    mean = np.mean([t.values for t in tensors], axis=0)
    merged = LogitTensor(values=mean, mask=first.mask, trial_id=first.trial_id, scheme="ensemble")
    return corn_decode(merged, max_line)


def save_logits(tensor: LogitTensor, path: Path):
    doc = {
        "trial_id": tensor.trial_id,
        "scheme": tensor.scheme,
        "shape": list(tensor.values.shape),
        "values": tensor.values.tolist(),
        "mask": tensor.mask.astype(int).tolist(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_logits(path: Path) -> LogitTensor:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    values = np.array(doc["values"], dtype=np.float64)
    if list(values.shape) != list(doc["shape"]):
        raise ShapeMismatchError(f"{path}: declared shape {doc['shape']} != data {values.shape}")
    return LogitTensor(
        values=values,
        mask=np.array(doc["mask"], dtype=bool),
        trial_id=str(doc.get("trial_id", "")),
        scheme=str(doc.get("scheme", "")),
    )


def load_logit_dir(dir: Path) -> list[LogitTensor]:
    return [load_logits(p) for p in sorted(Path(dir).glob("*.json"))]
