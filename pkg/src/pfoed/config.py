"""Study configuration: JSON schema, validation, and design-space construction.

A config fully determines a study; every random choice inside a run is keyed
by seeds recorded here, so identical configs reproduce identical outputs.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Optional, Union

from .core import DesignCandidate
from .density import AffineNoise, FixedNoise, NoiseModel
from .errors import ParseError, ValidationError
from .oed import DesignSpace
from .rng import stream

__all__ = ["StudyConfig", "load_config", "sensors_from_config", "design_space_from_config"]

_TOP_KEYS = {"model", "seed", "n_samples", "m_centers", "noise", "designs",
             "oed", "kde", "observed", "output"}


def _require_keys(section: dict, allowed: set, required: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ValidationError(where, f"unknown key(s) {sorted(unknown)}")
    missing = required - set(section)
    if missing:
        raise ValidationError(where, f"missing key(s) {sorted(missing)}")


def _pos_int(value, where: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
        raise ValidationError(where, "must be a positive integer")
    return value


def _seed(value, where: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < 2**64:
        raise ValidationError(where, "must be an unsigned 64-bit integer")
    return value


@dataclass(frozen=True)
class StudyConfig:
    """Validated study description with defaults applied."""

    model_name: str
    model_params: dict
    seed: int
    n_samples: int
    m_centers: Optional[int]
    noise: NoiseModel
    designs: dict
    oed_mode: str
    oed_k: int
    kde_rule: Union[str, tuple[float, ...]]
    kde_floor: float
    observed_center: Optional[tuple[float, ...]]
    output: Optional[str]

    def effective_dict(self) -> dict:
        """The fully-defaulted config as a JSON-serializable dict.

        Loading this dict back yields an equivalent config, so a study can be
        reproduced from their report summaries alone.
        """
        if isinstance(self.noise, FixedNoise):
            noise = {"type": "fixed", "sigma": list(self.noise.sigma)}
        else:
            noise = {"type": "affine", "a": self.noise.a, "b": self.noise.b}
        kde_bw = self.kde_rule if isinstance(self.kde_rule, str) else {
            "fixed": list(self.kde_rule)}
        out = {
            "model": {"name": self.model_name, "model_params": self.model_params},
            "seed": self.seed,
            "n_samples": self.n_samples,
            "m_centers": self.m_centers if self.m_centers is not None else self.n_samples,
            "noise": noise,
            "designs": self.designs,
            "oed": {"mode": self.oed_mode, "k": self.oed_k},
            "kde": {"bandwidth": kde_bw, "floor": self.kde_floor},
        }
        if self.observed_center is not None:
            out["observed"] = {"center": list(self.observed_center)}
        if self.output is not None:
            out["output"] = self.output
        return out


def _parse_noise(section, where="noise") -> NoiseModel:
    if not isinstance(section, dict):
        raise ValidationError(where, "must be an object")
    kind = section.get("type")
    if kind == "fixed":
        _require_keys(section, {"type", "sigma"}, {"type", "sigma"}, where)
        sigma = section["sigma"]
        if (not isinstance(sigma, list) or not sigma
                or not all(isinstance(s, (int, float)) and not isinstance(s, bool) for s in sigma)):
            raise ValidationError(f"{where}.sigma", "must be a nonempty list of reals")
        if any(s <= 0 for s in sigma):
            raise ValidationError(f"{where}.sigma", "must be positive")
        return FixedNoise(sigma=tuple(float(s) for s in sigma))
    if kind == "affine":
        _require_keys(section, {"type", "a", "b"}, {"type", "a", "b"}, where)
        a, b = section["a"], section["b"]
        if not isinstance(a, (int, float)) or isinstance(a, bool) or a <= 0:
            raise ValidationError(f"{where}.a", "must be a positive real")
        if not isinstance(b, (int, float)) or isinstance(b, bool) or b < 0:
            raise ValidationError(f"{where}.b", "must be a nonnegative real")
        return AffineNoise(a=float(a), b=float(b))
    raise ValidationError(f"{where}.type", "must be 'fixed' or 'affine'")


def _parse_designs(section, where="designs") -> dict:
    if not isinstance(section, dict):
        raise ValidationError(where, "must be an object")
    kind = section.get("type")
    if kind == "grid":
        _require_keys(section, {"type", "nx", "ny"}, {"type", "nx", "ny"}, where)
        return {"type": "grid",
                "nx": _pos_int(section["nx"], f"{where}.nx"),
                "ny": _pos_int(section["ny"], f"{where}.ny")}
    if kind == "random":
        _require_keys(section, {"type", "count", "seed"}, {"type", "count", "seed"}, where)
        return {"type": "random",
                "count": _pos_int(section["count"], f"{where}.count"),
                "seed": _seed(section["seed"], f"{where}.seed")}
    if kind == "file":
        _require_keys(section, {"type", "path"}, {"type", "path"}, where)
        path = section["path"]
        if not isinstance(path, str):
            raise ValidationError(f"{where}.path", "must be a string")
        if not os.path.isfile(path):
            raise ValidationError(f"{where}.path", f"no such file: {path}")
        return {"type": "file", "path": path}
    if kind == "qoi_sets":
        _require_keys(section, {"type", "sets"}, {"type", "sets"}, where)
        sets = section["sets"]
        if not isinstance(sets, list) or not sets:
            raise ValidationError(f"{where}.sets", "must be a nonempty list")
        clean = []
        for i, s in enumerate(sets):
            if (not isinstance(s, list) or not s
                    or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in s)):
                raise ValidationError(f"{where}.sets[{i}]",
                                      "must be a nonempty list of nonnegative integers")
            if len(set(s)) != len(s):
                raise ValidationError(f"{where}.sets[{i}]", "indices must be distinct")
            clean.append(list(s))
        return {"type": "qoi_sets", "sets": clean}
    raise ValidationError(f"{where}.type",
                          "must be one of 'grid', 'random', 'file', 'qoi_sets'")


def _parse_kde(section, where="kde"):
    _require_keys(section, {"bandwidth", "floor"}, set(), where)
    rule: Union[str, tuple[float, ...]] = "silverman"
    bw = section.get("bandwidth", "silverman")
    if isinstance(bw, str):
        if bw not in ("silverman", "scott"):
            raise ValidationError(f"{where}.bandwidth", "must be 'silverman', 'scott', or {'fixed': [...]}")
        rule = bw
    elif isinstance(bw, dict):
        _require_keys(bw, {"fixed"}, {"fixed"}, f"{where}.bandwidth")
        vals = bw["fixed"]
        if (not isinstance(vals, list) or not vals
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in vals)):
            raise ValidationError(f"{where}.bandwidth.fixed", "must be a nonempty list of positive reals")
        rule = tuple(float(v) for v in vals)
    else:
        raise ValidationError(f"{where}.bandwidth", "must be a string or {'fixed': [...]}")
    floor = section.get("floor", 1e-12)
    if not isinstance(floor, (int, float)) or isinstance(floor, bool) or floor <= 0:
        raise ValidationError(f"{where}.floor", "must be a positive real")
    return rule, float(floor)


def load_config(path: str) -> StudyConfig:
    """Load and fully validate a study config; defaults applied, unknown keys rejected."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.lineno, exc.msg) from exc
    if not isinstance(raw, dict):
        raise ValidationError("<root>", "config must be a JSON object")
    _require_keys(raw, _TOP_KEYS, {"model", "seed", "n_samples", "noise", "designs"}, "<root>")

    model = raw["model"]
    if not isinstance(model, dict):
        raise ValidationError("model", "must be an object")
    _require_keys(model, {"name", "model_params"}, {"name"}, "model")
    name = model["name"]
    if not isinstance(name, str):
        raise ValidationError("model.name", "must be a string")
    params = model.get("model_params", {})
    if not isinstance(params, dict):
        raise ValidationError("model.model_params", "must be an object")

    seed = _seed(raw["seed"], "seed")
    n_samples = _pos_int(raw["n_samples"], "n_samples")
    m_centers = None
    if "m_centers" in raw:
        m_centers = _pos_int(raw["m_centers"], "m_centers")
        if m_centers > n_samples:
            raise ValidationError("m_centers", "cannot exceed n_samples")

    noise = _parse_noise(raw["noise"])
    designs = _parse_designs(raw["designs"])

    oed_mode, oed_k = "exhaustive", 1
    if "oed" in raw:
        oed = raw["oed"]
        if not isinstance(oed, dict):
            raise ValidationError("oed", "must be an object")
        _require_keys(oed, {"mode", "k"}, {"mode"}, "oed")
        oed_mode = oed["mode"]
        if oed_mode not in ("exhaustive", "greedy"):
            raise ValidationError("oed.mode", "must be 'exhaustive' or 'greedy'")
        if "k" in oed:
            oed_k = _pos_int(oed["k"], "oed.k")
        elif oed_mode == "greedy":
            raise ValidationError("oed.k", "greedy mode requires k")

    kde_rule: Union[str, tuple[float, ...]] = "silverman"
    kde_floor = 1e-12
    if "kde" in raw:
        if not isinstance(raw["kde"], dict):
            raise ValidationError("kde", "must be an object")
        kde_rule, kde_floor = _parse_kde(raw["kde"])

    observed_center = None
    if "observed" in raw:
        obs = raw["observed"]
        if not isinstance(obs, dict):
            raise ValidationError("observed", "must be an object")
        _require_keys(obs, {"center"}, {"center"}, "observed")
        center = obs["center"]
        if (not isinstance(center, list) or not center
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in center)):
            raise ValidationError("observed.center", "must be a nonempty list of reals")
        observed_center = tuple(float(v) for v in center)

    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ValidationError("output", "must be a string")

    return StudyConfig(
        model_name=name,
        model_params=params,
        seed=seed,
        n_samples=n_samples,
        m_centers=m_centers,
        noise=noise,
        designs=designs,
        oed_mode=oed_mode,
        oed_k=oed_k,
        kde_rule=kde_rule,
        kde_floor=kde_floor,
        observed_center=observed_center,
        output=output,
    )


def sensors_from_config(cfg: StudyConfig) -> Optional[list[tuple[float, float]]]:
    """Sensor coordinates implied by the designs section, if any.

    Grid designs are cell-centered: nx * ny sensors at ((i+0.5)/nx, (j+0.5)/ny),
    x-major then y.  Random designs draw uniform points from the
    (designs.seed, "sensors") stream.  File designs with an ``x,y`` header list
    sensors explicitly; ``qoi_indices`` files and qoi_sets imply none.
    """
    d = cfg.designs
    if d["type"] == "grid":
        nx, ny = d["nx"], d["ny"]
        return [((i + 0.5) / nx, (j + 0.5) / ny) for i in range(nx) for j in range(ny)]
    if d["type"] == "random":
        pts = stream(d["seed"], "sensors").random((d["count"], 2))
        return [(float(x), float(y)) for x, y in pts]
    if d["type"] == "file":
        with open(d["path"], newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ValidationError("designs.path", "design file is empty")
            header = [h.strip() for h in header]
            if header == ["x", "y"]:
                out = []
                for row in reader:
                    if not row:
                        continue
                    out.append((float(row[0]), float(row[1])))
                if not out:
                    raise ValidationError("designs.path", "design file lists no sensors")
                return out
            if header == ["qoi_indices"]:
                return None
            raise ValidationError("designs.path",
                                  "header must be 'x,y' or 'qoi_indices'")
    return None


def design_space_from_config(cfg: StudyConfig, n_qoi: int,
                             sensors: Optional[list[tuple[float, float]]]) -> DesignSpace:
    """Candidate designs over a model's QoI columns."""
    d = cfg.designs
    if d["type"] == "qoi_sets" or (d["type"] == "file" and sensors is None):
        if d["type"] == "qoi_sets":
            sets = d["sets"]
        else:
            sets = []
            with open(d["path"], newline="") as fh:
                reader = csv.reader(fh)
                next(reader)  # header
                for row in reader:
                    if not row:
                        continue
                    sets.append([int(v) for v in row[0].split(";")])
        candidates = []
        for i, s in enumerate(sets):
            for idx in s:
                if not 0 <= idx < n_qoi:
                    raise ValidationError("designs", f"QoI index {idx} outside [0, {n_qoi})")
            candidates.append(DesignCandidate(id=i, qoi_indices=tuple(s)))
        return DesignSpace(candidates=tuple(candidates), description=d["type"])
    assert sensors is not None
    candidates = tuple(
        DesignCandidate(id=i, qoi_indices=(i,), coords=((x, y),))
        for i, (x, y) in enumerate(sensors)
    )
    return DesignSpace(candidates=candidates, description=f"{d['type']} sensors")
