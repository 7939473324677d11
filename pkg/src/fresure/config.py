"""Experiment configuration stored as a single JSON document."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import DEFAULT_DT_S, DEFAULT_N_SAMPLES
from .model import NoiseModel, SpinSystemParams
from .spectra import DEFAULT_PROMINENCE, DEFAULT_WINDOW_HZ, DEFAULT_ZERO_PAD

SECTIONS = ("system", "noise", "acquisition", "mc", "analysis", "sweep")


@dataclass
class ExperimentConfig:
    system: SpinSystemParams = field(default_factory=SpinSystemParams)
    noise: NoiseModel = field(default_factory=NoiseModel)
    dt_s: float = DEFAULT_DT_S
    n_samples: int = DEFAULT_N_SAMPLES
    n_mc: int = 10_000
    seed: int = 0
    sampling: str = "stratified"
    window_hz: tuple[float, float] = DEFAULT_WINDOW_HZ
    zero_pad_factor: int = DEFAULT_ZERO_PAD
    prominence: float = DEFAULT_PROMINENCE
    mode: str = "absorption"
    sweep_n_values: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 3.0, 4.0, 5.0])
    sweep_mc_samples: int = 1000
    sweep_threshold: float | None = None

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "noise": {"gamma_fwhm_hz": self.noise.gamma_fwhm_hz, "kind": self.noise.kind},
            "acquisition": {"dt_s": self.dt_s, "n_samples": self.n_samples},
            "mc": {"n_mc": self.n_mc, "seed": self.seed, "sampling": self.sampling},
            "analysis": {
                "window_hz": list(self.window_hz),
                "zero_pad_factor": self.zero_pad_factor,
                "prominence": self.prominence,
                "mode": self.mode,
            },
            "sweep": {
                "n_values": list(self.sweep_n_values),
                "mc_samples": self.sweep_mc_samples,
                "threshold": self.sweep_threshold,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - set(SECTIONS)
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        mc = d.get("mc", {})
        if "seed" not in mc:
            raise ValueError("config must set mc.seed explicitly")
        acq = d.get("acquisition", {})
        an = d.get("analysis", {})
        sw = d.get("sweep", {})
        base = cls()
        return cls(
            system=SpinSystemParams.from_dict(d.get("system", {})),
            noise=NoiseModel(**d.get("noise", {})),
            dt_s=float(acq.get("dt_s", base.dt_s)),
            n_samples=int(acq.get("n_samples", base.n_samples)),
            n_mc=int(mc.get("n_mc", base.n_mc)),
            seed=int(mc["seed"]),
            sampling=mc.get("sampling", base.sampling),
            window_hz=tuple(float(w) for w in an.get("window_hz", base.window_hz)),
            zero_pad_factor=int(an.get("zero_pad_factor", base.zero_pad_factor)),
            prominence=float(an.get("prominence", base.prominence)),
            mode=an.get("mode", base.mode),
            sweep_n_values=[float(n) for n in sw.get("n_values", base.sweep_n_values)],
            sweep_mc_samples=int(sw.get("mc_samples", base.sweep_mc_samples)),
            sweep_threshold=sw.get("threshold", base.sweep_threshold),
        )


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def save_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path
