"""Two-stage training schedule: reconstruction-only warmup, then adversarial
fine-tuning with twice-per-step discriminator updates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
import torch

from .audio import AudioBuffer
from .degradation import CutoffDistribution, NoiseSpec, degrade_example
from .discriminator import DiscriminatorConfig, build_discriminators
from .errors import CheckpointError, DivergenceError
from .generator import GeneratorConfig, build_generator
from .losses import LossWeights, lsgan_d_loss_torch, lsgan_g_loss_torch, multires_stft_loss_torch
from .spectral import istft_torch, stft_torch

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 4
    segment_seconds: float = 5.0
    stage1_steps: int = 10000
    stage1_lr: float = 1e-4
    stage2_steps: int = 300000
    stage2_g_lr: float = 1e-5
    stage2_d_lr: float = 1e-4
    d_updates_per_g: int = 2
    adam_beta1: float = 0.5
    adam_beta2: float = 0.9
    alpha: float = 0.4
    cutoff_mean_hz: float = 3000.0
    cutoff_std_hz: float = 300.0
    cutoff_clamp_low_hz: float = 500.0
    cutoff_clamp_high_hz: float = 10000.0
    noise_power_dbfs: float = -30.0
    noise_enabled: bool = True
    gain_low_db: float = -6.0
    gain_high_db: float = 4.0
    seed: int = 0
    gen_depth: int = 4
    gen_base_channels: int = 32
    gen_dense_block_layers: int = 3
    gen_growth_rate: int = 16
    gen_freq_embedding_dims: int = 8
    disc_layers: int = 7
    disc_base_channels: int = 16
    disc_group_size: int = 4

    def __post_init__(self):
        for name in ("batch_size", "d_updates_per_g"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("stage1_steps", "stage2_steps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("stage1_lr", "stage2_g_lr", "stage2_d_lr", "segment_seconds"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            depth=self.gen_depth,
            base_channels=self.gen_base_channels,
            dense_block_layers=self.gen_dense_block_layers,
            growth_rate=self.gen_growth_rate,
            freq_embedding_dims=self.gen_freq_embedding_dims,
        )

    def discriminator_config(self) -> DiscriminatorConfig:
        return DiscriminatorConfig(
            layers_per_disc=self.disc_layers,
            base_channels=self.disc_base_channels,
            group_size=self.disc_group_size,
        )

    def cutoff_distribution(self) -> CutoffDistribution:
        return CutoffDistribution(
            self.cutoff_mean_hz,
            self.cutoff_std_hz,
            self.cutoff_clamp_low_hz,
            self.cutoff_clamp_high_hz,
        )

    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(self.noise_power_dbfs, self.noise_enabled)

    def loss_weights(self) -> LossWeights:
        return LossWeights(alpha=self.alpha)

    def fingerprint(self) -> str:
        import hashlib
        import json

        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


def parse_config(path) -> TrainConfig:
    """Read a flat key = value config file; unknown keys are rejected."""
    known = {f.name: f.type for f in fields(TrainConfig)}
    values = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value
    kwargs = {}
    for key, value in values.items():
        target = known[key]
        if target in ("int", int):
            kwargs[key] = int(value)
        elif target in ("float", float):
            kwargs[key] = float(value)
        elif target in ("bool", bool):
            if value.lower() not in ("true", "false", "0", "1"):
                raise ValueError(f"invalid boolean for {key}: {value!r}")
            kwargs[key] = value.lower() in ("true", "1")
        else:
            kwargs[key] = value
    return TrainConfig(**kwargs)


def write_config(path, cfg: TrainConfig) -> None:
    with open(path, "w") as f:
        for key, value in asdict(cfg).items():
            f.write(f"{key} = {value}\n")


def _step_rng(seed: int, stage: int, step: int, sub: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stage, step, sub]))


def sample_batch(corpus, cfg: TrainConfig, rng: np.random.Generator):
    """Draw batch_size degraded/target segment pairs from the corpus."""
    seg_len = int(round(cfg.segment_seconds * corpus[0].sample_rate))
    usable = [buf for buf in corpus if len(buf) >= seg_len]
    if not usable:
        raise ValueError("corpus holds no segment of the configured length")
    xs, ys = [], []
    for _ in range(cfg.batch_size):
        buf = usable[int(rng.integers(len(usable)))]
        start = int(rng.integers(len(buf) - seg_len + 1))
        target = AudioBuffer(buf.samples[start : start + seg_len], buf.sample_rate)
        ex = degrade_example(
            target,
            cfg.cutoff_distribution(),
            cfg.noise_spec(),
            (cfg.gain_low_db, cfg.gain_high_db),
            rng,
        )
        xs.append(ex.degraded.samples)
        ys.append(ex.target.samples)
    to_tensor = lambda a: torch.as_tensor(np.stack(a), dtype=torch.float32)
    return to_tensor(xs), to_tensor(ys)


def _check_finite_params(module, step):
    for name, p in module.named_parameters():
        if not torch.all(torch.isfinite(p)):
            raise DivergenceError(f"parameter {name} became non-finite", step=step)


def generator_process(generator, x: torch.Tensor) -> torch.Tensor:
    """Waveform-to-waveform pass through the spectrogram generator."""
    spec = stft_torch(x)
    out = generator(spec)
    return istft_torch(out, x.shape[1])


class Trainer:
    """Owns the models, optimizers, schedule position, and loss traces."""

    def __init__(self, cfg: TrainConfig, corpus, generator=None, discriminators=None):
        if not corpus:
            raise ValueError("corpus is empty")
        self.cfg = cfg
        self.corpus = list(corpus)
        self.generator = generator or build_generator(cfg.generator_config(), cfg.seed)
        self.discriminators = discriminators or build_discriminators(
            cfg.discriminator_config(), cfg.seed + 1
        )
        betas = (cfg.adam_beta1, cfg.adam_beta2)
        self.g_opt_stage1 = torch.optim.Adam(self.generator.parameters(), lr=cfg.stage1_lr, betas=betas)
        self.g_opt_stage2 = torch.optim.Adam(self.generator.parameters(), lr=cfg.stage2_g_lr, betas=betas)
        self.d_opt = torch.optim.Adam(self.discriminators.parameters(), lr=cfg.stage2_d_lr, betas=betas)
        self.stage1_step = 0
        self.stage2_step = 0
        self.d_update_count = 0
        self.trace = []  # rows of (step, loss_name, value)

    def _break_dead_head(self):
        """Nudge an all-zero output head off its stationary point.

        A zero-initialized head makes the generator output exactly silence, and
        the magnitude-only reconstruction loss has a zero gradient there (the
        derivative of ``|z|`` vanishes at ``z = 0``), so the optimizer would
        never move.  A tiny deterministic perturbation of the head restores a
        nonzero output and lets gradients flow; it is small enough to leave the
        effective starting point at "pass (almost) nothing".
        """
        head = self.generator.head
        with torch.no_grad():
            if all(torch.all(p == 0) for p in head.parameters()):
                with torch.random.fork_rng():
                    torch.manual_seed(self.cfg.seed + 2)
                    head.weight.normal_(std=1e-3)

    # -- stage 1: reconstruction-only warmup ---------------------------------

    def train_stage1(self, num_steps=None):
        steps = self.cfg.stage1_steps if num_steps is None else num_steps
        weights = self.cfg.loss_weights()
        if steps > 0:
            self._break_dead_head()
        for _ in range(steps):
            step = self.stage1_step
            rng = _step_rng(self.cfg.seed, 1, step)
            x, y = sample_batch(self.corpus, self.cfg, rng)
            yhat = generator_process(self.generator, x)
            loss = multires_stft_loss_torch(y, yhat, weights)
            if not torch.isfinite(loss):
                raise DivergenceError("stage-1 loss became non-finite", step=step)
            self.g_opt_stage1.zero_grad()
            loss.backward()
            self.g_opt_stage1.step()
            self.trace.append((step, "stage1/l_rec", float(loss.detach())))
            self.stage1_step += 1
            if step % 10 == 0:
                _check_finite_params(self.generator, step)
        return self

    # -- stage 2: adversarial fine-tuning ------------------------------------

    def train_stage2(self, num_steps=None):
        steps = self.cfg.stage2_steps if num_steps is None else num_steps
        weights = self.cfg.loss_weights()
        if steps > 0:
            self._break_dead_head()
        for _ in range(steps):
            step = self.stage2_step

            # generator update on a fresh batch
            rng = _step_rng(self.cfg.seed, 2, step, 0)
            x, y = sample_batch(self.corpus, self.cfg, rng)
            yhat = generator_process(self.generator, x)
            fake_means = self.discriminators.score_means(yhat)
            l_adv = lsgan_g_loss_torch(fake_means)
            l_rec = multires_stft_loss_torch(y, yhat, weights)
            loss_g = l_adv + weights.alpha * l_rec
            if not torch.isfinite(loss_g):
                raise DivergenceError("stage-2 generator loss became non-finite", step=step)
            self.g_opt_stage2.zero_grad()
            loss_g.backward()
            self.g_opt_stage2.step()
            self.trace.append((step, "stage2/l_adv", float(l_adv.detach())))
            self.trace.append((step, "stage2/l_rec", float(l_rec.detach())))

            # discriminator updates, each on its own fresh batch
            for sub in range(self.cfg.d_updates_per_g):
                rng = _step_rng(self.cfg.seed, 2, step, 1 + sub)
                x, y = sample_batch(self.corpus, self.cfg, rng)
                with torch.no_grad():
                    yhat = generator_process(self.generator, x)
                real_means = self.discriminators.score_means(y)
                fake_means = self.discriminators.score_means(yhat)
                loss_d = sum(
                    lsgan_d_loss_torch(r, f) for r, f in zip(real_means, fake_means)
                )
                if not torch.isfinite(loss_d):
                    raise DivergenceError("stage-2 discriminator loss became non-finite", step=step)
                self.d_opt.zero_grad()
                loss_d.backward()
                self.d_opt.step()
                self.d_update_count += 1
                for k, (r, f) in enumerate(zip(real_means, fake_means), start=1):
                    self.trace.append(
                        (step, f"stage2/l_d{k}_sub{sub}", float(lsgan_d_loss_torch(r, f).detach()))
                    )

            self.stage2_step += 1
            if step % 10 == 0:
                _check_finite_params(self.generator, step)
                _check_finite_params(self.discriminators, step)
        return self

    # -- checkpointing --------------------------------------------------------

    def save(self, path):
        torch.save(
            {
                "version": CHECKPOINT_VERSION,
                "fingerprint": self.cfg.fingerprint(),
                "config": asdict(self.cfg),
                "generator": self.generator.state_dict(),
                "discriminators": self.discriminators.state_dict(),
                "g_opt_stage1": self.g_opt_stage1.state_dict(),
                "g_opt_stage2": self.g_opt_stage2.state_dict(),
                "d_opt": self.d_opt.state_dict(),
                "stage1_step": self.stage1_step,
                "stage2_step": self.stage2_step,
                "d_update_count": self.d_update_count,
            },
            path,
        )

    @classmethod
    def load(cls, path, corpus, cfg: TrainConfig = None):
        state = load_checkpoint(path)
        saved_cfg = TrainConfig(**state["config"])
        if cfg is not None and cfg.fingerprint() != state["fingerprint"]:
            raise CheckpointError("checkpoint fingerprint does not match the requested config")
        trainer = cls(cfg or saved_cfg, corpus)
        trainer.generator.load_state_dict(state["generator"])
        trainer.discriminators.load_state_dict(state["discriminators"])
        trainer.g_opt_stage1.load_state_dict(state["g_opt_stage1"])
        trainer.g_opt_stage2.load_state_dict(state["g_opt_stage2"])
        trainer.d_opt.load_state_dict(state["d_opt"])
        trainer.stage1_step = state["stage1_step"]
        trainer.stage2_step = state["stage2_step"]
        trainer.d_update_count = state["d_update_count"]
        return trainer


def load_checkpoint(path) -> dict:
    try:
        state = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(state, dict) or state.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version in {path}")
    return state


def write_trace_csv(path, trace) -> None:
    with open(path, "w") as f:
        f.write("step,loss_name,value\n")
        for step, name, value in trace:
            f.write(f"{step},{name},{value}\n")


def train_stage1(generator, corpus, cfg: TrainConfig):
    """Functional wrapper: returns (generator, loss trace)."""
    trainer = Trainer(cfg, corpus, generator=generator)
    trainer.train_stage1()
    return trainer.generator, trainer.trace


def train_stage2(generator, discriminators, corpus, cfg: TrainConfig):
    trainer = Trainer(cfg, corpus, generator=generator, discriminators=discriminators)
    trainer.train_stage2()
    return trainer.generator, trainer.discriminators, trainer.trace
