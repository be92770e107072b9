"""GAN-based minority oversampling: a vanilla adversarial pair and a
Wasserstein critic variant with weight clipping.

Both variants share the mirrored-generator design: the generator reverses
the discriminator's hidden widths and ends in a logistic head so samples
land in the unit feature box.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset, dataset_from_matrix, round_half_up
from .errors import ConfigError, DataError, ModelError
from .neural import (
    LayerSpec,
    Network,
    NetworkSpec,
    Optimizer,
    TrainConfig,
    init_network,
)

VGAN_DISC_HIDDEN = (128, 64, 32, 8)
WGAN_CRITIC_HIDDEN = (256, 128, 64, 32)
DEFAULT_EPOCHS = 10_000
DEFAULT_WEIGHT_CLIP = 0.01


@dataclass(frozen=True)
class GanSpec:
    variant: str
    latent_dim: int
    discriminator: NetworkSpec
    generator: NetworkSpec
    train: TrainConfig
    critic_steps: int = 5

    def __post_init__(self) -> None:
        if self.variant not in ("vgan", "wgan"):
            raise ConfigError(f"unknown GAN variant {self.variant!r}")
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be positive")
        if self.critic_steps < 1:
            raise ConfigError("critic_steps must be positive")
        head = self.discriminator.layers[-1].activation
        if self.variant == "vgan" and head != "logistic":
            raise ConfigError("vgan discriminator must end in a logistic layer")
        if self.variant == "wgan" and head != "linear":
            raise ConfigError("wgan critic must end in a linear layer")
        if self.generator.input_dim != self.latent_dim:
            raise ConfigError("generator input width must equal latent_dim")

    @property
    def feature_count(self) -> int:
        return self.generator.layers[-1].width

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "latent_dim": self.latent_dim,
            "discriminator": self.discriminator.to_dict(),
            "generator": self.generator.to_dict(),
            "train": self.train.to_dict(),
            "critic_steps": self.critic_steps,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GanSpec":
        return cls(
            variant=doc["variant"],
            latent_dim=int(doc["latent_dim"]),
            discriminator=NetworkSpec.from_dict(doc["discriminator"]),
            generator=NetworkSpec.from_dict(doc["generator"]),
            train=TrainConfig.from_dict(doc["train"]),
            critic_steps=int(doc["critic_steps"]),
        )


def default_gan_spec(variant: str, feature_count: int, latent_dim: int = 8) -> GanSpec:
    """Published architectures: four leaky-ReLU hidden layers per critic,
    10,000 training epochs; generator mirrors the hidden widths reversed."""
    if feature_count < 1:
        raise ConfigError("feature_count must be positive")
    if variant == "vgan":
        hidden = VGAN_DISC_HIDDEN
        head = LayerSpec(1, "logistic")
        loss = "binary_cross_entropy"
        clip = None
    elif variant == "wgan":
        hidden = WGAN_CRITIC_HIDDEN
        head = LayerSpec(1, "linear")
        loss = "wasserstein_critic"
        clip = DEFAULT_WEIGHT_CLIP
    else:
        raise ConfigError(f"unknown GAN variant {variant!r}")
    disc = NetworkSpec(
        input_dim=feature_count,
        layers=tuple(LayerSpec(w, "leaky_relu") for w in hidden) + (head,),
        loss=loss,
    )
    gen = NetworkSpec(
        input_dim=latent_dim,
        layers=tuple(LayerSpec(w, "leaky_relu") for w in reversed(hidden))
        + (LayerSpec(feature_count, "logistic"),),
        loss="mse",  # placeholder; generator updates flow through the critic
    )
    train = TrainConfig(
        optimizer="adam",
        learning_rate=1e-3,
        epochs=DEFAULT_EPOCHS,
        batch_size=64,
        seed=0,
        weight_clip=clip,
    )
    return GanSpec(variant, latent_dim, disc, gen, train, critic_steps=5)


@dataclass
class Gan:
    spec: GanSpec
    generator: Network
    discriminator: Network
    disc_losses: list[float]
    gen_losses: list[float]

    def to_dict(self) -> dict:
        return {
            "format": "fraudkit.gan/1",
            "spec": self.spec.to_dict(),
            "generator": self.generator.to_dict(),
            "discriminator": self.discriminator.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Gan":
        if doc.get("format") != "fraudkit.gan/1":
            raise ModelError(f"unsupported gan document {doc.get('format')!r}")
        return cls(
            GanSpec.from_dict(doc["spec"]),
            Network.from_dict(doc["generator"]),
            Network.from_dict(doc["discriminator"]),
            [],
            [],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Gan":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _bce(outputs: np.ndarray, targets: np.ndarray):
    eps = 1e-12
    yc = np.clip(outputs, eps, 1.0 - eps)
    loss = float(-np.mean(targets * np.log(yc) + (1.0 - targets) * np.log(1.0 - yc)))
    dz = (outputs - targets) / outputs.size  # logistic-head shortcut
    return loss, dz


def train_gan(minority: Dataset | np.ndarray, spec: GanSpec) -> Gan:
    """Alternating adversarial training on minority rows in the unit box.

    vgan: the discriminator minimizes BCE on real-vs-generated while the
    generator maximizes log D(G(z)) (non-saturating form). wgan: the critic
    maximizes mean D(real) - mean D(fake) under weight clipping, taking
    `critic_steps` updates per generator update.
    """
    x = minority.matrix() if isinstance(minority, Dataset) else np.asarray(minority, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("need >= 2 minority rows")
    if x.min() < -1e-9 or x.max() > 1.0 + 1e-9:
        raise DataError("minority rows must be normalized to [0, 1]")
    if x.shape[1] != spec.feature_count:
        raise ConfigError("spec feature count does not match the data")

    n = x.shape[0]
    cfg = spec.train
    disc = init_network(spec.discriminator, cfg.seed)
    gen = init_network(spec.generator, cfg.seed + 1)
    d_opt = Optimizer(cfg.optimizer, cfg.learning_rate, disc)
    g_opt = Optimizer(cfg.optimizer, cfg.learning_rate, gen)
    rng = np.random.default_rng(cfg.seed + 2)
    m = min(cfg.batch_size, n)

    def real_batch() -> np.ndarray:
        if m >= n:
            return x
        return x[rng.choice(n, size=m, replace=False)]

    def fake_batch() -> np.ndarray:
        return rng.standard_normal((m, spec.latent_dim))

    disc_losses: list[float] = []
    gen_losses: list[float] = []
    for epoch in range(cfg.epochs):
        # --- discriminator / critic phase (generator frozen)
        d_loss = 0.0
        critic_steps = spec.critic_steps if spec.variant == "wgan" else 1
        for _ in range(critic_steps):
            real = real_batch()
            fake = gen.forward(fake_batch())
            batch = np.vstack([real, fake])
            out, cache = disc.forward_cached(batch)
            if spec.variant == "vgan":
                targets = np.vstack([np.ones((real.shape[0], 1)), np.zeros((m, 1))])
                d_loss, dz = _bce(out, targets)
                grads, _ = disc.backward(cache, dz, dout_is_dz=True)
            else:
                # maximize mean(real) - mean(fake)  ==  minimize the negation
                d_loss = float(-(np.mean(out[: real.shape[0]]) - np.mean(out[real.shape[0] :])))
                dout = np.vstack(
                    [
                        np.full((real.shape[0], 1), -1.0 / real.shape[0]),
                        np.full((m, 1), 1.0 / m),
                    ]
                )
                grads, _ = disc.backward(cache, dout)
            d_opt.step(disc, grads)
            if cfg.weight_clip is not None:
                disc.clip_weights(cfg.weight_clip)

        # --- generator phase (discriminator frozen)
        z = fake_batch()
        g_out, g_cache = gen.forward_cached(z)
        d_out, d_cache = disc.forward_cached(g_out)
        if spec.variant == "vgan":
            g_loss, dz = _bce(d_out, np.ones_like(d_out))
            _, dx = disc.backward(d_cache, dz, dout_is_dz=True)
        else:
            g_loss = float(-np.mean(d_out))
            _, dx = disc.backward(d_cache, np.full_like(d_out, -1.0 / d_out.size))
        g_grads, _ = gen.backward(g_cache, dx)
        g_opt.step(gen, g_grads)

        if not (math.isfinite(d_loss) and math.isfinite(g_loss)):
            raise ModelError(f"non-finite GAN loss at epoch {epoch}")
        disc_losses.append(d_loss)
        gen_losses.append(g_loss)

    return Gan(spec, gen, disc, disc_losses, gen_losses)


def sample_synthetic(gan: Gan, n: int, seed: int) -> np.ndarray:
    """n generator samples on standard-normal noise, clamped to [0, 1]."""
    if n < 0:
        raise ConfigError("n must be non-negative")
    if n == 0:
        return np.empty((0, gan.spec.feature_count))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, gan.spec.latent_dim))
    return np.clip(gan.generator.forward(z), 0.0, 1.0)


def oversample_gan(
    data: Dataset,
    cfg,
    onehot_groups: Sequence[Sequence[int]] | None = None,
    spec: GanSpec | None = None,
    overrides: dict | None = None,
) -> Dataset:
    """Balance a labeled dataset by GAN-sampling new minority rows."""
    from .resample import project_onehot  # local import to avoid a cycle

    labels = data.require_labels()
    x = data.matrix()
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise DataError("both classes must be nonempty")
    minority_label = 1 if len(pos) <= len(neg) else 0
    minority_idx = pos if minority_label == 1 else neg
    majority_count = data.n - len(minority_idx)
    wanted = round_half_up(majority_count * cfg.target_ratio) - len(minority_idx)
    if wanted <= 0:
        return data

    if spec is None:
        spec = default_gan_spec(cfg.method, x.shape[1])
        train = replace(spec.train, seed=cfg.seed)
        if overrides:
            train = replace(train, **{k: v for k, v in overrides.items() if k in train.to_dict()})
        spec = replace(spec, train=train)
    gan = train_gan(x[minority_idx], spec)
    synth = sample_synthetic(gan, wanted, seed=cfg.seed + 1)
    if onehot_groups:
        synth = project_onehot(synth, onehot_groups)
    new_x = np.vstack([x, synth])
    new_labels = np.concatenate([labels, np.full(wanted, minority_label)])
    return dataset_from_matrix(new_x, new_labels, schema=data.schema)
