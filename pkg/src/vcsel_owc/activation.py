"""Choosing which beam serves a user.

* SSS: serve with the beam delivering the most received power.
* CCR: the same rule applied to the RxAP power matrix built from light
  retroreflected by the handset, plus the signalling overhead it costs.
* ODTx: uplink RSS at five ceiling PDs fed to a small classifier that
  outputs the beam directly.
* Benchmarks: stale positions (processing delay) and noisy positions
  (image-sensor positioning) fed to SSS.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import mlp
from .channel import (BeamParams, CeilingPd, OdtxParams, downlink_power_matrix,
                      received_power_uplink, received_power_uplink_single)
from .geometry import (BeamArrayLayout, OrientationModel, UP, sample_orientations)
from .link import ApdNoiseLedger
from .mlp import MlpModel

NO_COVERAGE = -1


def select_beam_sss(powers) -> int:
    """Index of the strongest entry (lowest index wins ties).

    Returns :data:`NO_COVERAGE` when every entry is zero.
    """
    p = np.asarray(powers, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("expected a non-empty power vector")
    i = int(np.argmax(p))
    return i if p[i] > 0 else NO_COVERAGE


def select_beams(powers) -> np.ndarray:
    """Row-wise :func:`select_beam_sss` for a ``(K, n_beam)`` matrix."""
    p = np.asarray(powers, dtype=float)
    idx = np.argmax(p, axis=-1)
    best = np.take_along_axis(p, idx[..., None], axis=-1)[..., 0]
    return np.where(best > 0, idx, NO_COVERAGE)


def select_beam_ccr(matrix) -> int:
    """Beam whose RxAP collects the most retroreflected power."""
    return select_beam_sss(matrix)


def similar_power(a: float, b: float, tol_db: float = 3.0) -> bool:
    if a <= 0 or b <= 0:
        return False
    return abs(10 * math.log10(a / b)) <= tol_db


# --------------------------------------------------------------------------
# signalling overhead
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TimingParams:
    t_ts: float = 0.3e-6
    t_rs: float = 0.3e-6
    t_delta: float = 3e-9
    t_sifs: float = 2e-6
    l_data: float = 65536 * 8.0  # bits

    def __post_init__(self):
        if min(self.t_ts, self.t_rs, self.t_delta, self.t_sifs, self.l_data) <= 0:
            raise ValueError("timing parameters must be positive")

    @property
    def t_delay(self) -> float:
        # test signal, propagation, reflected signal, then two SIFS gaps
        return self.t_ts + self.t_delta + self.t_rs + 2.0 * self.t_sifs


class Throughput(NamedTuple):
    t_data: float
    t_delay: float
    t_tot: float
    throughput: float

    @property
    def factor(self) -> float:
        return self.t_data / self.t_tot


def effective_throughput(timing: TimingParams, zeta_down: float) -> Throughput:
    if zeta_down <= 0:
        raise ValueError("downlink rate must be positive")
    t_data = timing.l_data / zeta_down
    t_tot = t_data + timing.t_delay
    return Throughput(t_data, timing.t_delay, t_tot, zeta_down * t_data / t_tot)


def effective_rate(timing: TimingParams, zeta) -> np.ndarray:
    """Vectorised throughput; zero rate maps to zero."""
    zeta = np.asarray(zeta, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(zeta > 0, timing.l_data / (timing.l_data / zeta + timing.t_delay), 0.0)


# --------------------------------------------------------------------------
# RSS datasets and the classifier
# --------------------------------------------------------------------------

def serving_beams(layout: BeamArrayLayout, beam: BeamParams, ledger: ApdNoiseLedger,
                  positions) -> np.ndarray:
    """SSS beam index for up-facing receivers at ``positions`` (``(K, 2|3)``)."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    if pos.shape[1] == 2:
        pos = np.column_stack([pos, np.full(len(pos), layout.ue_plane_height)])
    return select_beams(downlink_power_matrix(layout, beam, pos, UP, ledger.a_eff, ledger.psi_c))


@dataclass
class RssDataset:
    """Uplink RSS rows with their SSS beam label.

    ``features`` are raw watts ``(n, n_pd)``; ``positions`` the UE ``(x, y)``;
    ``train`` / ``test`` hold row indices of the 80/20 split.
    """

    features: np.ndarray
    labels: np.ndarray
    positions: np.ndarray
    normals: np.ndarray
    train: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    test: np.ndarray = field(default_factory=lambda: np.zeros(0, int))

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> "RssDataset":
        return RssDataset(self.features[idx], self.labels[idx], self.positions[idx],
                          self.normals[idx])


def uplink_features(odtx: OdtxParams, pds: list[CeilingPd], positions, normals=None,
                    uplink: str = "odtx") -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    if uplink == "odtx":
        cols = [received_power_uplink(odtx, pos, pd) for pd in pds]
    elif uplink == "single":
        if normals is None:
            raise ValueError("single-LED uplink needs handset normals")
        cols = [received_power_uplink_single(odtx, pos, normals, pd) for pd in pds]
    else:
        raise ValueError(f"unknown uplink {uplink!r}")
    return np.column_stack(cols)


def generate_training_set(layout: BeamArrayLayout, beam: BeamParams, ledger: ApdNoiseLedger,
                          odtx: OdtxParams, pds: list[CeilingPd],
                          orientation: OrientationModel, n: int,
                          rng: np.random.Generator, uplink: str = "odtx",
                          train_fraction: float = 0.8) -> RssDataset:
    """Sample ``n`` users uniformly over the array footprint.

    Positions, orientations and the split draw from separate child streams,
    so switching the orientation model leaves positions (and, for the
    omnidirectional uplink, every feature) bit-identical.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pos_rng, ori_rng, split_rng = rng.spawn(3)
    xmin, xmax, ymin, ymax = layout.footprint
    xy = np.column_stack([pos_rng.uniform(xmin, xmax, n), pos_rng.uniform(ymin, ymax, n)])
    p3 = np.column_stack([xy, np.full(n, layout.ue_plane_height)])
    normals = sample_orientations(orientation, ori_rng, n)
    feats = uplink_features(odtx, pds, p3, normals, uplink)
    labels = serving_beams(layout, beam, ledger, p3)
    order = split_rng.permutation(n)
    cut = int(round(train_fraction * n))
    return RssDataset(feats, labels, xy, normals, np.sort(order[:cut]), np.sort(order[cut:]))


def train_mlp(dataset: RssDataset, n_hidden: int, epochs: int, learning_rate: float,
              rng: np.random.Generator, n_out: int | None = None,
              output: str = "softmax", batch_size: int = 256,
              position_bounds=None) -> MlpModel:
    """Fit a 5 -> ``n_hidden`` -> ``n_out`` network on the dataset's train rows.

    ``output="softmax"`` learns beam labels; ``output="sigmoid"`` regresses the
    position rescaled to [0, 1] within ``position_bounds`` (x/y min/max).
    """
    train_rows = dataset.train if len(dataset.train) else np.arange(len(dataset))
    if len(train_rows) == 0:
        raise ValueError("empty dataset")
    feats = dataset.features[train_rows]
    init_rng, sgd_rng = rng.spawn(2)
    if output == "softmax":
        k = int(n_out if n_out is not None else dataset.labels.max() + 1)
        target = dataset.labels[train_rows]
        if np.any(target < 0) or np.any(target >= k):
            raise ValueError("labels outside [0, n_out)")
    else:
        k = 2
        target = normalize_positions(dataset.positions[train_rows], position_bounds)
    model = MlpModel.init(feats.shape[1], n_hidden, k, init_rng, output)
    model.fit_scaler(feats)
    mlp.train(model, model.transform(feats), target, epochs, learning_rate, sgd_rng,
              batch_size=batch_size)
    return model


def normalize_positions(xy, bounds):
    xmin, xmax, ymin, ymax = bounds
    xy = np.asarray(xy, dtype=float)
    return np.column_stack([(xy[:, 0] - xmin) / (xmax - xmin), (xy[:, 1] - ymin) / (ymax - ymin)])


def denormalize_positions(u, bounds):
    xmin, xmax, ymin, ymax = bounds
    u = np.asarray(u, dtype=float)
    return np.column_stack([xmin + u[:, 0] * (xmax - xmin), ymin + u[:, 1] * (ymax - ymin)])


class BeamPrediction(NamedTuple):
    probabilities: np.ndarray
    index: int


def predict_beam(model: MlpModel, rss5) -> BeamPrediction:
    if model.output != "softmax":
        raise ValueError("predict_beam needs a softmax (beam) model")
    rss = np.asarray(rss5, dtype=float)
    if rss.ndim != 1:
        raise ValueError("predict_beam takes a single RSS vector")
    prob = model.predict_proba(rss)[0]
    return BeamPrediction(prob, int(np.argmax(prob)))


def predict_beams(model: MlpModel, rss) -> np.ndarray:
    return np.argmax(model.predict_proba(rss), axis=1)


def activation_accuracy(model: MlpModel, testset: RssDataset, layout=None, beam=None,
                        ledger=None, position_bounds=None) -> float:
    """Share of rows whose predicted beam equals the SSS label.

    A sigmoid (positioning) model is scored by running SSS at the predicted
    position, which needs ``layout``, ``beam``, ``ledger`` and the bounds.
    """
    if len(testset) == 0:
        raise ValueError("empty test set")
    if model.output == "softmax":
        pred = predict_beams(model, testset.features)
    else:
        xy = denormalize_positions(model.predict_proba(testset.features), position_bounds)
        pred = serving_beams(layout, beam, ledger, xy)
    return float(np.mean(pred == testset.labels))


# --------------------------------------------------------------------------
# benchmark schemes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkScheme:
    """``kind`` is ``"ccr"``, ``"odtx"`` or ``"isvlp"``.

    ``delay`` is how stale the position used for selection is (s);
    ``pos_error_std`` the RMS radial positioning error (m), split equally
    between the two axes.
    """

    kind: str
    delay: float = 0.0
    pos_error_std: float = 0.0

    def __post_init__(self):
        if self.kind not in ("ccr", "odtx", "isvlp"):
            raise ValueError(f"unknown scheme {self.kind!r}")
        if self.delay < 0 or self.pos_error_std < 0:
            raise ValueError("delay and error must be non-negative")

    @property
    def label(self) -> str:
        if self.kind == "ccr":
            return "ccr"
        if self.kind == "odtx":
            return f"odtx_{self.delay * 1e3:g}ms"
        return f"isvlp_{self.delay * 1e3:g}ms_{self.pos_error_std * 1e3:g}mm"


def scheme_positions(scheme: BenchmarkScheme, true_xy_delayed, rng: np.random.Generator):
    """Positions the scheme believes in, given the (already delayed) truth."""
    xy = np.asarray(true_xy_delayed, dtype=float)
    if scheme.kind != "isvlp" or scheme.pos_error_std == 0:
        return xy
    return xy + rng.normal(0.0, scheme.pos_error_std / math.sqrt(2.0), xy.shape)


def benchmark_select(scheme: BenchmarkScheme, true_position_at: Callable[[float], np.ndarray],
                     t: float, layout: BeamArrayLayout, beam: BeamParams,
                     ledger: ApdNoiseLedger, rng: np.random.Generator) -> int:
    """Beam a scheme activates at time ``t``.

    CCR sees the current position; ODTx and IS-VLP see the position
    ``delay`` seconds ago, IS-VLP with Gaussian error on top.
    """
    if t < scheme.delay:
        raise ValueError("no position history that far back")
    lag = 0.0 if scheme.kind == "ccr" else scheme.delay
    xy = np.asarray(true_position_at(t - lag), dtype=float)[:2]
    xy = scheme_positions(scheme, xy[None], rng)
    return int(serving_beams(layout, beam, ledger, xy)[0])
