"""Desk-scale experiments: synthetic 8-class datasets, separability, sweeps.

Classes are four walker identities (anthropometric presets P1..P4) crossed
with armed/unarmed, ordered P1-A, P1-U, P2-A, ... as class indices 0..7.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Sequence

import numpy as np

from .chtm import ChebyshevTimeMap, build_chtm
from .dsp import DopplerTimeMap, DspConfig, RangeTimeMap, process_cube, torso_ranges
from .echo import RadarConfig, ScattererSet, WallConfig, add_noise, simulate_cube
from .envelope import EnvelopeSet, SmoothingConfig, extract_envelopes
from .kinematics import Gait, GaitConfig

log = logging.getLogger(__name__)

IDENTITIES = ("P1", "P2", "P3", "P4")
THREATS = ("A", "U")
CLASS_NAMES = tuple(f"{p}-{t}" for p in IDENTITIES for t in THREATS)
REPRESENTATIONS = ("DTM", "ChTM")

# (limb/height scale, gait-frequency scale) per identity
PRESET_OFFSETS = {"P1": (1.00, 1.00), "P2": (1.08, 0.90), "P3": (0.92, 1.10), "P4": (0.92, 0.90)}


def class_index(identity: int, armed: bool) -> int:
    return 2 * identity + (0 if armed else 1)


def make_presets(base: GaitConfig = GaitConfig()) -> Dict[str, GaitConfig]:
    presets = {}
    for name, (size, freq) in PRESET_OFFSETS.items():
        presets[name] = replace(
            base,
            torso_height=base.torso_height * size,
            thigh_length=base.thigh_length * size,
            calf_length=base.calf_length * size,
            arm_length=base.arm_length * size,
            gait_frequency=base.gait_frequency * freq,
        )
    return presets


@dataclass(frozen=True)
class SampleSpec:
    sample_id: str
    identity: int
    armed: bool
    gait: GaitConfig
    seed: int

    @property
    def label(self) -> int:
        return class_index(self.identity, self.armed)

    @property
    def class_name(self) -> str:
        return CLASS_NAMES[self.label]

    def to_dict(self) -> dict:
        gait = asdict(self.gait)
        gait["pattern"] = self.gait.pattern.value
        return {"sample_id": self.sample_id, "identity": IDENTITIES[self.identity],
                "armed": self.armed, "label": self.class_name, "seed": self.seed, "gait": gait}

    @classmethod
    def from_dict(cls, d: dict) -> "SampleSpec":
        return cls(d["sample_id"], IDENTITIES.index(d["identity"]), bool(d["armed"]),
                   GaitConfig(**d["gait"]).validate(), int(d["seed"]))


def generate_dataset(presets: Dict[str, GaitConfig] | Sequence[GaitConfig], per_class: int, seed: int,
                     observation_time: float = 1.0, range_limits=(1.0, 5.0),
                     heading_jitter_deg: float = 10.0, frequency_jitter: float = 0.10,
                     phase_jitter: float = 2 * np.pi,
                     identities: Sequence[int] | None = None,
                     threats: Sequence[bool] = (True, False)) -> List[SampleSpec]:
    """Randomized walker specs, ``per_class`` for every (identity, threat) class.

    Each walk starts far enough out that it stays inside ``range_limits``
    while approaching the radar for ``observation_time`` seconds.
    """
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    presets = list(presets.values()) if isinstance(presets, dict) else list(presets)
    if len(presets) != len(IDENTITIES):
        raise ValueError(f"need {len(IDENTITIES)} presets")
    identities = range(len(IDENTITIES)) if identities is None else identities
    specs = []
    for ident in identities:
        for armed in threats:
            label = class_index(ident, armed)
            for k in range(per_class):
                sample_seed = int(np.random.SeedSequence([seed, label, k]).generate_state(1)[0])
                rng = np.random.default_rng(sample_seed)
                base = presets[ident]
                near = range_limits[0] + base.torso_speed * observation_time
                start = rng.uniform(min(near, range_limits[1]), range_limits[1])
                heading = np.deg2rad(heading_jitter_deg) * rng.uniform(-1, 1)
                gait = replace(
                    base,
                    initial_position=(-start * np.cos(heading), start * np.sin(heading), 0.0),
                    walk_heading=heading,
                    phase_offset=phase_jitter * rng.uniform(0, 1),
                    gait_frequency=base.gait_frequency * (1 + frequency_jitter * rng.uniform(-1, 1)),
                    pattern=Gait.ARMED if armed else Gait.NORMAL,
                )
                specs.append(SampleSpec(f"{CLASS_NAMES[label]}-{k:04d}", ident, armed,
                                        gait.validate(), sample_seed))
    return specs


@dataclass
class SampleMaps:
    rtm: RangeTimeMap
    dtm: DopplerTimeMap
    envelopes: EnvelopeSet
    chtm_macro: ChebyshevTimeMap
    chtm_micro: ChebyshevTimeMap


@dataclass(frozen=True)
class Pipeline:
    radar: RadarConfig = RadarConfig()
    wall: WallConfig = WallConfig()
    scatterers: ScattererSet = field(default_factory=ScattererSet)
    dsp: DspConfig = DspConfig()
    smoothing: SmoothingConfig = SmoothingConfig()
    n_order: int = 32
    epsilon: float = 1e-6

    def cube(self, spec: SampleSpec):
        return simulate_cube(spec.gait, self.radar, self.wall, self.scatterers)

    def maps_from_cube(self, cube, gait: GaitConfig) -> SampleMaps:
        center = self.radar.array_center
        _, rtm, dtm = process_cube(cube, lambda t: torso_ranges(gait, t, center), self.dsp)
        env = extract_envelopes(dtm, self.smoothing)
        return SampleMaps(rtm, dtm, env,
                          build_chtm(dtm, env, "macro", self.n_order, self.epsilon),
                          build_chtm(dtm, env, "micro", self.n_order, self.epsilon))

    def maps(self, spec: SampleSpec, delta_snr_db: float = np.inf) -> SampleMaps:
        cube = self.cube(spec)
        if np.isfinite(delta_snr_db):
            cube = add_noise(cube, delta_snr_db, noise_seed(spec))
        return self.maps_from_cube(cube, spec.gait)


def noise_seed(spec: SampleSpec) -> int:
    """Same realization at every noise level, so levels differ only in scale."""
    return (spec.seed + 0x9E3779B9) % 2**32


def representation_features(maps: SampleMaps, representation: str, region: str = "micro") -> np.ndarray:
    if representation == "DTM":
        return maps.dtm.normalized().magnitudes.ravel()
    if representation == "ChTM":
        return (maps.chtm_micro if region == "micro" else maps.chtm_macro).values.ravel()
    raise ValueError(f"unknown representation {representation!r}")


@dataclass
class LabeledSample:
    label: int
    features: np.ndarray
    source_id: str = ""


@dataclass
class SeparabilityReport:
    d_inter: float
    d_intra: float
    centroids: np.ndarray
    counts: np.ndarray
    labels: np.ndarray


def minmax_normalize(x: np.ndarray) -> np.ndarray:
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (x - lo) / span


def _stack(samples: Sequence[LabeledSample]):
    if not samples:
        raise ValueError("no samples")
    lengths = {len(s.features) for s in samples}
    if len(lengths) != 1:
        raise ValueError(f"feature vectors disagree in length: {sorted(lengths)}")
    x = np.vstack([np.asarray(s.features, float) for s in samples])
    y = np.array([s.label for s in samples])
    return x, y


def separability(samples: Sequence[LabeledSample], labels: Sequence[int] | None = None) -> SeparabilityReport:
    """Mean pairwise centroid distance and mean within-class spread on [0, 1]-scaled features."""
    x, y = _stack(samples)
    classes = np.unique(y) if labels is None else np.asarray(labels)
    counts = np.array([(y == c).sum() for c in classes])
    if len(classes) < 2:
        raise ValueError("separability needs at least two classes")
    if np.any(counts == 0):
        raise ValueError("every class needs at least one sample")
    x = minmax_normalize(x)
    mu = np.vstack([x[y == c].mean(axis=0) for c in classes])
    n = len(classes)
    pair = [np.linalg.norm(mu[i] - mu[j]) for i in range(n - 1) for j in range(i + 1, n)]
    d_inter = 2.0 / (n * (n - 1)) * float(np.sum(pair))
    d_intra = float(np.mean([np.linalg.norm(x[y == c] - mu[i], axis=1).mean()
                             for i, c in enumerate(classes)]))
    return SeparabilityReport(d_inter, d_intra, mu, counts, classes)


@dataclass
class ClassifierResult:
    accuracy: float
    confusion: np.ndarray    # rows true class, columns predicted class
    labels: np.ndarray

    @property
    def per_class(self) -> np.ndarray:
        totals = self.confusion.sum(axis=1)
        return np.divide(np.diag(self.confusion), totals, out=np.zeros(len(totals)),
                         where=totals > 0)


def nearest_centroid(train: Sequence[LabeledSample], test: Sequence[LabeledSample],
                     k: int | None = None, labels: Sequence[int] | None = None) -> ClassifierResult:
    """Nearest class centroid after train-set z-scoring; ``k`` switches to k-NN voting.

    Ties go to the lowest class index.
    """
    xtr, ytr = _stack(train)
    xte, yte = _stack(test)
    if xtr.shape[1] != xte.shape[1]:
        raise ValueError("train and test features differ in length")
    known = np.unique(ytr)
    unseen = set(np.unique(yte)) - set(known)
    if unseen:
        raise ValueError(f"test labels {sorted(unseen)} are absent from training")
    mean = xtr.mean(axis=0)
    std = xtr.std(axis=0)
    std[std == 0] = 1.0
    ztr, zte = (xtr - mean) / std, (xte - mean) / std
    if k is None:
        centroids = np.vstack([ztr[ytr == c].mean(axis=0) for c in known])
        dist = _sq_distances(zte, centroids)
        pred = known[np.argmin(dist, axis=1)]
    else:
        dist = _sq_distances(zte, ztr)
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        votes = np.zeros((len(zte), len(known)), int)
        for i, nn in enumerate(order):
            for j in nn:
                votes[i, np.searchsorted(known, ytr[j])] += 1
        pred = known[np.argmax(votes, axis=1)]
    labels = np.array(sorted(set(known) | set(yte))) if labels is None else np.asarray(labels)
    index = {c: i for i, c in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), int)
    for t, p in zip(yte, pred):
        confusion[index[t], index[p]] += 1
    return ClassifierResult(float(np.mean(pred == yte)), confusion, labels)


def _sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = (a ** 2).sum(1)[:, None] + (b ** 2).sum(1)[None, :] - 2 * a @ b.T
    return np.maximum(d, 0)


def stratified_split(labels: Sequence[int], test_fraction: float = 0.2, seed: int = 0):
    """Index arrays ``(train, test)``.

    Classes with two or more samples contribute at least one test and one
    training sample.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        n_test = min(max(int(round(test_fraction * len(idx))), 1), len(idx) - 1)
        test.extend(idx[:n_test])
        train.extend(idx[n_test:])
    return np.sort(train), np.sort(test)


@dataclass
class SweepRow:
    key: float
    representation: str
    accuracy: float
    per_class: np.ndarray


@dataclass
class SweepTable:
    key_name: str
    rows: List[SweepRow] = field(default_factory=list)

    def add(self, key, representation: str, result: ClassifierResult):
        if any(r.key == key and r.representation == representation for r in self.rows):
            raise ValueError(f"duplicate sweep row {key}/{representation}")
        per_class = np.full(len(CLASS_NAMES), np.nan)
        per_class[result.labels] = result.per_class
        self.rows.append(SweepRow(key, representation, result.accuracy, per_class))

    def accuracy(self, key, representation: str) -> float:
        for r in self.rows:
            if r.key == key and r.representation == representation:
                return r.accuracy
        raise KeyError((key, representation))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.key_name, "representation", *CLASS_NAMES, "overall"])
        for r in self.rows:
            w.writerow([_fmt_key(r.key), r.representation,
                        *("" if np.isnan(v) else f"{v:.4f}" for v in r.per_class),
                        f"{r.accuracy:.4f}"])
        return buf.getvalue()


def _fmt_key(key) -> str:
    if isinstance(key, float) and np.isinf(key):
        return "inf" if key > 0 else "-inf"
    return f"{key:g}"


def _run_specs(fn, items, jobs: int):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


@dataclass(frozen=True)
class _SnrTask:
    pipeline: Pipeline
    levels: tuple
    representations: tuple
    region: str = "micro"

    def __call__(self, spec: SampleSpec):
        cube = self.pipeline.cube(spec)
        out = {}
        for level in self.levels:
            noisy = cube if np.isposinf(level) else add_noise(cube, level, noise_seed(spec))
            maps = self.pipeline.maps_from_cube(noisy, spec.gait)
            for rep in self.representations:
                out[(level, rep)] = representation_features(maps, rep, self.region)
        return out


def snr_sweep(specs: Sequence[SampleSpec], pipeline: Pipeline, levels: Sequence[float],
              representations: Sequence[str] = REPRESENTATIONS, split_seed: int = 0,
              test_fraction: float = 0.2, jobs: int = 1, region: str = "micro",
              k: int | None = None) -> SweepTable:
    """Accuracy of each representation with noise injected into the raw cubes."""
    if not levels:
        raise ValueError("levels must be non-empty")
    task = _SnrTask(pipeline, tuple(levels), tuple(representations), region)
    feats = _run_specs(task, list(specs), jobs)
    labels = np.array([s.label for s in specs])
    train, test = stratified_split(labels, test_fraction, split_seed)
    table = SweepTable("delta_snr_db")
    for level in levels:
        for rep in representations:
            samples = [LabeledSample(int(labels[i]), feats[i][(level, rep)], specs[i].sample_id)
                       for i in range(len(specs))]
            result = nearest_centroid([samples[i] for i in train], [samples[i] for i in test], k)
            log.info("snr %s %s accuracy %.3f", _fmt_key(level), rep, result.accuracy)
            table.add(level, rep, result)
    return table


@dataclass
class CachedSample:
    """DTM and envelopes kept so ChTMs can be rebuilt at any order."""

    label: int
    dtm: DopplerTimeMap
    envelopes: EnvelopeSet
    source_id: str = ""


def order_sweep(cached: Sequence[CachedSample], orders: Sequence[int], epsilon: float = 1e-6,
                split_seed: int = 0, test_fraction: float = 0.2, region: str = "micro",
                k: int | None = None) -> SweepTable:
    if not orders:
        raise ValueError("orders must be non-empty")
    labels = np.array([c.label for c in cached])
    train, test = stratified_split(labels, test_fraction, split_seed)
    table = SweepTable("n_order")
    for order in orders:
        samples = [LabeledSample(c.label, build_chtm(c.dtm, c.envelopes, region, order, epsilon).values.ravel(),
                                 c.source_id) for c in cached]
        result = nearest_centroid([samples[i] for i in train], [samples[i] for i in test], k)
        log.info("order %d accuracy %.3f", order, result.accuracy)
        table.add(order, "ChTM", result)
    return table


@dataclass(frozen=True)
class _CacheTask:
    pipeline: Pipeline

    def __call__(self, spec: SampleSpec) -> CachedSample:
        maps = self.pipeline.maps(spec)
        return CachedSample(spec.label, maps.dtm, maps.envelopes, spec.sample_id)


def cache_samples(specs: Sequence[SampleSpec], pipeline: Pipeline, jobs: int = 1) -> List[CachedSample]:
    return _run_specs(_CacheTask(pipeline), list(specs), jobs)


def config_hash(obj) -> str:
    """SHA-256 of the canonical JSON form of ``obj``."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(text.encode()).hexdigest()


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not serializable: {type(o)}")
