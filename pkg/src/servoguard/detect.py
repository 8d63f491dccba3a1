"""Day-level anomaly decisions and the end-to-end experiment drivers.

Day distances from either detector are calibrated against healthy
reference days: the calibration distances are fitted with a half-Laplace
(exponential) scale and the decision threshold is that distribution's
q-quantile.  Calibration days default to synthetic healthy days swept
deterministically across a small family of motion programs around the
training program, so the threshold already prices in normal task
variation instead of firing on every program change.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .alignment import DEFAULT_SCALE_TARGET, NORMALIZE_MODES, aligned_distance, joint_embed
from .baseline import components_for_energy, fit_pca, pca_distance
from .errors import ParameterError
from .features import StftConfig, feature_matrix
from .preprocess import assemble
from .signals import (PROFILES, OperationProfile, _derive_seed,
                      generate_day, generate_scenario)

METHODS = ("pca", "align")

VERDICT_HEALTHY = "healthy"
VERDICT_ANOMALOUS = "anomalous"

DEFAULT_PERCENTILES = (0.5, 0.75, 0.9, 0.95, 0.975, 0.99)

CALIBRATION_MODES = ("op_sweep", "same_op")

_CAL_SALT = 0xCA11B8A7E
_REP_SALT = 0x0BE5E0F5


@dataclass
class HalfLaplaceModel:
    """Half-Laplace (exponential) fit of healthy-day distances."""

    scale: float
    n_calibration: int


def fit_half_laplace(deltas):
    """Maximum-likelihood scale for non-negative distances: their mean."""
    arr = np.asarray(deltas, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterError("need a non-empty 1-d array of distances")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("distances contain non-finite values")
    if np.any(arr < 0):
        raise ParameterError("distances must be >= 0")
    scale = float(arr.mean())
    if scale == 0.0:
        raise ParameterError("all calibration distances are zero; scale is degenerate")
    return HalfLaplaceModel(scale=scale, n_calibration=int(arr.size))


def quantile_threshold(model, q):
    """The q-quantile of the fitted distribution: -scale * ln(1 - q)."""
    if not np.isfinite(q) or not 0.0 < q < 1.0:
        raise ParameterError("q must be in (0, 1), got %r" % (q,))
    if model.scale <= 0 or not np.isfinite(model.scale):
        raise ParameterError("model scale must be finite and > 0, got %r" % (model.scale,))
    return float(-model.scale * np.log1p(-q))


def classify(delta, epsilon):
    """Verdict for one day distance; the threshold itself counts as healthy."""
    if not np.isfinite(delta) or delta < 0:
        raise ParameterError("delta must be finite and >= 0, got %r" % (delta,))
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise ParameterError("epsilon must be finite and > 0, got %r" % (epsilon,))
    return VERDICT_ANOMALOUS if delta > epsilon else VERDICT_HEALTHY


@dataclass
class DetectorConfig:
    """Every knob of the day-scoring pipeline with tuned defaults."""

    stft: StftConfig = field(default_factory=StftConfig)
    mu: float = 0.5
    embed_dim: int = 0
    gate: float = 1.0
    normalize: str = "spectral"
    scale_target: float = DEFAULT_SCALE_TARGET
    std_floor: float = 1e-2
    pca_energy: float = 0.95
    pca_components: int = 0
    percentile: float = 0.95
    calibration_days: int = 20
    calibration_mode: str = "op_sweep"
    calibration_freq_lo: int = 3
    calibration_freq_hi: int = 14
    n_samples: int = 300

    def validate(self):
        self.stft.validate()
        if not 0.0 <= self.mu <= 1.0:
            raise ParameterError("mu must be in [0, 1], got %r" % (self.mu,))
        if self.embed_dim < 0:
            raise ParameterError("embed_dim must be >= 0 (0 = auto), got %r" % (self.embed_dim,))
        if self.gate <= 0:
            raise ParameterError("gate must be > 0, got %r" % (self.gate,))
        if self.normalize not in NORMALIZE_MODES:
            raise ParameterError("normalize must be one of %s, got %r"
                                 % (", ".join(NORMALIZE_MODES), self.normalize))
        if self.scale_target <= 0:
            raise ParameterError("scale_target must be > 0, got %r" % (self.scale_target,))
        if not 0.0 <= self.std_floor < 1.0:
            raise ParameterError("std_floor must be in [0, 1), got %r" % (self.std_floor,))
        if not 0.0 < self.pca_energy <= 1.0:
            raise ParameterError("pca_energy must be in (0, 1], got %r" % (self.pca_energy,))
        if self.pca_components < 0:
            raise ParameterError("pca_components must be >= 0, got %r" % (self.pca_components,))
        if not 0.0 < self.percentile < 1.0:
            raise ParameterError("percentile must be in (0, 1), got %r" % (self.percentile,))
        if self.calibration_days < 1:
            raise ParameterError("calibration_days must be >= 1, got %r" % (self.calibration_days,))
        if self.calibration_mode not in CALIBRATION_MODES:
            raise ParameterError("calibration_mode must be one of %s, got %r"
                                 % (", ".join(CALIBRATION_MODES), self.calibration_mode))
        if not 2 <= self.calibration_freq_lo <= self.calibration_freq_hi:
            raise ParameterError("calibration frequency range is invalid")
        if self.n_samples < self.stft.window_len + self.stft.hop:
            raise ParameterError("n_samples must cover at least two analysis frames")


@dataclass
class DayRecord:
    day: int
    method: str
    distance: float
    threshold: float
    verdict: str
    ground_truth: bool = None
    is_training: bool = False


@dataclass
class DetectionReport:
    method: str
    percentile: float
    threshold: float
    scale: float
    records: list
    summary: dict


def day_features(trace, config):
    """Feature matrix of one raw trace under the configured transform."""
    return feature_matrix(assemble(trace), config.stft)


def _align_scorer(train_fm, config):
    train = train_fm.data

    def score(fm):
        if config.embed_dim == 0:
            d_eff = None
        else:
            n = min(train.shape[0], fm.data.shape[0])
            d_eff = max(1, min(config.embed_dim, n))
        emb = joint_embed(train, fm.data, mu=config.mu, embed_dim=d_eff,
                          lam=config.gate, normalize=config.normalize,
                          std_floor=config.std_floor,
                          scale_target=config.scale_target)
        return aligned_distance(emb)

    return score


def _pca_scorer(train_fm, config):
    train = train_fm.data
    p = config.pca_components
    if p == 0:
        p = components_for_energy(train, config.pca_energy)
    p = max(1, min(p, min(train.shape)))
    model = fit_pca(train, p)

    def score(fm):
        return pca_distance(train, fm.data, model)

    return score


def make_scorer(method, train_fm, config):
    """Day-distance function for one method, bound to the training day."""
    if method == "align":
        return _align_scorer(train_fm, config)
    if method == "pca":
        return _pca_scorer(train_fm, config)
    raise ParameterError("method must be one of %s, got %r" % (", ".join(METHODS), method))


def calibration_profiles(base_profile, config):
    """Healthy motion programs used to calibrate the threshold.

    same_op repeats the training program; op_sweep cycles the speed and
    torque frequency deterministically through the configured integer
    range (position one cycle below, amplitudes and noise as in
    training), so the fitted scale reflects the full span of normal
    program changes and barely moves between runs.
    """
    if config.calibration_mode == "same_op":
        return [base_profile] * config.calibration_days
    span = config.calibration_freq_hi - config.calibration_freq_lo + 1
    profiles = []
    for k in range(config.calibration_days):
        f = config.calibration_freq_lo + k % span
        profiles.append(OperationProfile(
            position_amp=base_profile.position_amp, position_freq=float(f - 1),
            speed_amp=base_profile.speed_amp, speed_freq=float(f),
            torque_freq=float(f),
            torque_ripple_amp=base_profile.torque_ripple_amp,
            torque_ripple_freq=base_profile.torque_ripple_freq,
            noise_std=base_profile.noise_std))
    return profiles


def calibration_traces(base_profile, config, rng_seed):
    profiles = calibration_profiles(base_profile, config)
    traces = []
    for k, profile in enumerate(profiles):
        seed = _derive_seed(rng_seed ^ _CAL_SALT, k)
        traces.append(generate_day(profile, config.n_samples, seed, day=1))
    return traces


def _summarize(records):
    scored = [r for r in records if not r.is_training and r.ground_truth is not None]
    positives = [r for r in scored if r.ground_truth]
    negatives = [r for r in scored if not r.ground_truth]
    tpr = (sum(r.verdict == VERDICT_ANOMALOUS for r in positives) / len(positives)
           if positives else None)
    fpr = (sum(r.verdict == VERDICT_ANOMALOUS for r in negatives) / len(negatives)
           if negatives else None)
    return {"n_scored": len(scored), "n_positive": len(positives),
            "n_negative": len(negatives), "tpr": tpr, "fpr": fpr}


def detect_days(traces, method="align", config=None, labels=None, rng_seed=0,
                base_token="O1", calibration_indices=None):
    """Score every trace against the first one (the training day).

    Calibration distances come either from synthetic healthy days
    (default) or, when calibration_indices is given, from the listed
    trace positions of the dataset itself.
    """
    config = config if config is not None else DetectorConfig()
    config.validate()
    if method not in METHODS:
        raise ParameterError("method must be one of %s, got %r" % (", ".join(METHODS), method))
    if len(traces) < 1:
        raise ParameterError("need at least the training trace")
    if labels is not None and len(labels) != len(traces):
        raise ParameterError("labels must match traces in length")
    fms = [day_features(t, config) for t in traces]
    scorer = make_scorer(method, fms[0], config)
    if calibration_indices is None:
        base = PROFILES.get(base_token)
        if base is None:
            raise ParameterError("unknown base operation token %r" % (base_token,))
        cal = calibration_traces(base, config, rng_seed)
        cal_deltas = [scorer(day_features(t, config)) for t in cal]
    else:
        idx = list(calibration_indices)
        if not idx:
            raise ParameterError("calibration_indices must not be empty")
        for i in idx:
            if not 0 < i < len(traces):
                raise ParameterError(
                    "calibration index %r out of range (1..%d)" % (i, len(traces) - 1))
        cal_deltas = [scorer(fms[i]) for i in idx]
    model = fit_half_laplace(cal_deltas)
    threshold = quantile_threshold(model, config.percentile)
    records = []
    for i, (trace, fm) in enumerate(zip(traces, fms)):
        dist = scorer(fm)
        records.append(DayRecord(
            day=trace.day, method=method, distance=float(dist), threshold=threshold,
            verdict=classify(dist, threshold),
            ground_truth=None if labels is None else bool(labels[i]),
            is_training=i == 0))
    return DetectionReport(method=method, percentile=config.percentile,
                           threshold=threshold, scale=model.scale,
                           records=records, summary=_summarize(records))


def run_scenario(schedule, method="align", config=None):
    """Generate a synthetic scenario and score it end to end."""
    config = config if config is not None else DetectorConfig()
    traces, labels = generate_scenario(schedule, config.n_samples)
    return detect_days(traces, method=method, config=config, labels=labels,
                       rng_seed=schedule.rng_seed, base_token=schedule.days[0])


def roc_experiment(schedule, percentiles=DEFAULT_PERCENTILES, repetitions=10,
                   config=None, methods=METHODS):
    """Average TPR/FPR over repeated scenario draws for every threshold.

    Each repetition redraws the scenario and calibration noise under a
    seed derived from the schedule seed and the repetition index.
    Returns rows of {method, percentile, fpr, tpr} sorted by method then
    percentile.
    """
    config = config if config is not None else DetectorConfig()
    config.validate()
    percentiles = [float(q) for q in percentiles]
    if not percentiles:
        raise ParameterError("need at least one percentile")
    for q in percentiles:
        if not 0.0 < q < 1.0:
            raise ParameterError("percentiles must lie in (0, 1), got %r" % (q,))
    if repetitions < 1:
        raise ParameterError("repetitions must be >= 1, got %r" % (repetitions,))
    for m in methods:
        if m not in METHODS:
            raise ParameterError("method must be one of %s, got %r" % (", ".join(METHODS), m))
    rates = {m: {q: [] for q in percentiles} for m in methods}
    for rep in range(repetitions):
        rep_seed = _derive_seed(schedule.rng_seed ^ _REP_SALT, rep)
        rep_schedule = replace(schedule, rng_seed=rep_seed)
        traces, labels = generate_scenario(rep_schedule, config.n_samples)
        scored_labels = labels[1:]
        n_pos = sum(scored_labels)
        n_neg = len(scored_labels) - n_pos
        if n_pos == 0:
            raise ParameterError("schedule has no anomalous day to score; TPR is undefined")
        if n_neg == 0:
            raise ParameterError("schedule has no healthy day to score; FPR is undefined")
        fms = [day_features(t, config) for t in traces]
        base = PROFILES[rep_schedule.days[0]]
        cal_fms = [day_features(t, config)
                   for t in calibration_traces(base, config, rep_seed)]
        for m in methods:
            scorer = make_scorer(m, fms[0], config)
            dists = np.array([scorer(fm) for fm in fms[1:]])
            cal_deltas = [scorer(fm) for fm in cal_fms]
            model = fit_half_laplace(cal_deltas)
            pos_mask = np.array(scored_labels, dtype=bool)
            for q in percentiles:
                eps = quantile_threshold(model, q)
                flagged = dists > eps
                rates[m][q].append((float(flagged[~pos_mask].mean()),
                                    float(flagged[pos_mask].mean())))
    rows = []
    for m in methods:
        for q in sorted(percentiles):
            pairs = rates[m][q]
            rows.append({"method": m, "percentile": q,
                         "fpr": float(np.mean([p[0] for p in pairs])),
                         "tpr": float(np.mean([p[1] for p in pairs]))})
    return rows


def report_to_dict(report):
    return {
        "method": report.method,
        "percentile": report.percentile,
        "threshold": report.threshold,
        "scale": report.scale,
        "summary": report.summary,
        "records": [{"day": r.day, "method": r.method, "distance": r.distance,
                     "threshold": r.threshold, "verdict": r.verdict,
                     "ground_truth": r.ground_truth, "is_training": r.is_training}
                    for r in report.records],
    }


def write_report_json(report, path):
    with open(path, "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")


def write_distance_csv(report, path):
    with open(path, "w") as fh:
        fh.write("day,method,distance,threshold,verdict,ground_truth,is_training\n")
        for r in report.records:
            gt = "" if r.ground_truth is None else str(bool(r.ground_truth)).lower()
            fh.write("%d,%s,%.17g,%.17g,%s,%s,%s\n"
                     % (r.day, r.method, r.distance, r.threshold, r.verdict, gt,
                        str(r.is_training).lower()))


def write_roc_csv(rows, path):
    with open(path, "w") as fh:
        fh.write("method,percentile,fpr,tpr\n")
        for row in rows:
            fh.write("%s,%.17g,%.17g,%.17g\n"
                     % (row["method"], row["percentile"], row["fpr"], row["tpr"]))
