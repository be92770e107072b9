import numpy as np
import pytest

from fraudkit.augment import (
    Gan,
    GanSpec,
    default_gan_spec,
    oversample_gan,
    sample_synthetic,
    train_gan,
)
from fraudkit.errors import ConfigError, DataError
from fraudkit.neural import NetworkSpec, TrainConfig, layer_stack
from fraudkit.resample import BalancerConfig


def small_spec(variant, d=2, epochs=200, seed=0, lr=2e-3, latent=4):
    """Desk-scale GAN: the published four-layer stacks at 10k epochs are far
    too slow for unit tests; the adversarial mechanics are identical."""
    if variant == "vgan":
        disc = NetworkSpec(
            d, layer_stack([16, 8, 1], ["leaky_relu", "leaky_relu", "logistic"]), "binary_cross_entropy"
        )
        clip = None
    else:
        disc = NetworkSpec(
            d, layer_stack([16, 8, 1], ["leaky_relu", "leaky_relu", "linear"]), "wasserstein_critic"
        )
        clip = 0.01
    gen = NetworkSpec(latent, layer_stack([8, 16, d], ["leaky_relu", "leaky_relu", "logistic"]), "mse")
    train = TrainConfig(
        optimizer="adam", learning_rate=lr, epochs=epochs, batch_size=64, seed=seed, weight_clip=clip
    )
    return GanSpec(variant, latent, disc, gen, train, critic_steps=5)


def point_mass_minority(p=(0.3, 0.7), n=4):
    return np.tile(np.asarray(p, dtype=float), (n, 1))


# ------------------------------------------------------------- default spec


def test_default_vgan_discriminator_widths():
    spec = default_gan_spec("vgan", 10)
    assert [l.width for l in spec.discriminator.layers] == [128, 64, 32, 8, 1]
    assert spec.discriminator.layers[-1].activation == "logistic"
    assert all(l.activation == "leaky_relu" for l in spec.discriminator.layers[:-1])


def test_default_wgan_critic_widths():
    spec = default_gan_spec("wgan", 10)
    assert [l.width for l in spec.discriminator.layers] == [256, 128, 64, 32, 1]
    assert spec.discriminator.layers[-1].activation == "linear"
    assert spec.train.weight_clip == 0.01


def test_default_epochs_ten_thousand():
    assert default_gan_spec("vgan", 3).train.epochs == 10_000
    assert default_gan_spec("wgan", 3).train.epochs == 10_000


def test_default_generator_mirrors_and_matches_feature_count():
    spec = default_gan_spec("vgan", 1)
    assert spec.feature_count == 1
    assert [l.width for l in spec.generator.layers] == [8, 32, 64, 128, 1]
    assert spec.generator.layers[-1].activation == "logistic"
    assert spec.generator.input_dim == spec.latent_dim == 8


def test_spec_validates_heads():
    good = default_gan_spec("vgan", 2)
    with pytest.raises(ConfigError):
        GanSpec("wgan", good.latent_dim, good.discriminator, good.generator, good.train)


# ------------------------------------------------------------- training


def test_vgan_point_mass_convergence():
    gan = train_gan(point_mass_minority(), small_spec("vgan", epochs=2000, seed=1))
    samples = sample_synthetic(gan, 500, seed=99)
    assert np.abs(samples.mean(axis=0) - (0.3, 0.7)).max() < 0.1


def test_wgan_point_mass_convergence_and_clip():
    gan = train_gan(point_mass_minority(), small_spec("wgan", epochs=2000, seed=0))
    samples = sample_synthetic(gan, 500, seed=99)
    assert np.abs(samples.mean(axis=0) - (0.3, 0.7)).max() < 0.1
    assert max(np.abs(w).max() for w in gan.discriminator.weights) <= 0.01
    assert max(np.abs(b).max() for b in gan.discriminator.biases) <= 0.01


def test_vgan_equilibrium_discriminator_accuracy():
    rng = np.random.default_rng(5)
    real = np.clip(rng.normal([0.5, 0.5], 0.05, size=(200, 2)), 0, 1)
    gan = train_gan(real[:150], small_spec("vgan", epochs=1000, seed=1, lr=5e-4))
    held_real = gan.discriminator.forward(real[150:]).ravel()
    fakes = gan.discriminator.forward(sample_synthetic(gan, 50, seed=123)).ravel()
    accuracy = (np.sum(held_real >= 0.5) + np.sum(fakes < 0.5)) / 100
    assert 0.35 <= accuracy <= 0.65


def test_point_mass_variance_shrinks_with_training():
    # same seed stream: a 100-epoch run is a strict prefix of the 2000-epoch run
    early = train_gan(point_mass_minority(), small_spec("vgan", epochs=100, seed=1))
    late = train_gan(point_mass_minority(), small_spec("vgan", epochs=2000, seed=1))
    v_early = sample_synthetic(early, 500, seed=99).var(axis=0).mean()
    v_late = sample_synthetic(late, 500, seed=99).var(axis=0).mean()
    assert v_late < v_early


def test_train_gan_deterministic():
    spec = small_spec("vgan", epochs=50, seed=3)
    a = train_gan(point_mass_minority(), spec)
    b = train_gan(point_mass_minority(), spec)
    assert all(np.array_equal(x, y) for x, y in zip(a.generator.weights, b.generator.weights))
    assert a.disc_losses == b.disc_losses


def test_train_gan_loss_curves_length():
    gan = train_gan(point_mass_minority(), small_spec("wgan", epochs=40, seed=0))
    assert len(gan.disc_losses) == len(gan.gen_losses) == 40


def test_train_gan_requires_unit_box():
    with pytest.raises(DataError):
        train_gan(np.array([[0.5, 3.0], [0.1, 0.2]]), small_spec("vgan"))


def test_train_gan_requires_two_rows():
    with pytest.raises(DataError):
        train_gan(np.array([[0.5, 0.5]]), small_spec("vgan"))


# ------------------------------------------------------------- sampling


def test_sample_zero_rows():
    gan = train_gan(point_mass_minority(), small_spec("vgan", epochs=10, seed=0))
    assert sample_synthetic(gan, 0, seed=1).shape == (0, 2)


def test_sample_in_unit_box():
    gan = train_gan(point_mass_minority(), small_spec("vgan", epochs=10, seed=0))
    samples = sample_synthetic(gan, 76, seed=5)
    assert samples.shape == (76, 2)
    assert samples.min() >= 0.0 and samples.max() <= 1.0


def test_sample_deterministic_per_seed():
    gan = train_gan(point_mass_minority(), small_spec("vgan", epochs=10, seed=0))
    assert np.array_equal(sample_synthetic(gan, 8, seed=7), sample_synthetic(gan, 8, seed=7))
    assert not np.array_equal(sample_synthetic(gan, 8, seed=7), sample_synthetic(gan, 8, seed=8))


# ------------------------------------------------------------- persistence


def test_gan_round_trip(tmp_path):
    gan = train_gan(point_mass_minority(), small_spec("wgan", epochs=20, seed=2))
    path = tmp_path / "gan.json"
    gan.save(path)
    back = Gan.load(path)
    assert np.array_equal(sample_synthetic(gan, 5, seed=3), sample_synthetic(back, 5, seed=3))


# ------------------------------------------------------------- oversampling


def test_oversample_gan_balances_counts(imbalanced_blobs):
    cfg = BalancerConfig(method="vgan", seed=6)
    out = oversample_gan(imbalanced_blobs, cfg, spec=small_spec("vgan", epochs=60, seed=6))
    labels = out.labels
    assert int(np.sum(labels == 1)) == int(np.sum(labels == 0)) == 88
    synth = out.matrix()[imbalanced_blobs.n :]
    assert synth.min() >= 0.0 and synth.max() <= 1.0
    assert out.rows[: imbalanced_blobs.n] == imbalanced_blobs.rows
