"""Adapter and backbone model structure, identity init, freeze bookkeeping."""

import numpy as np
import pytest

import adapternet.autodiff as ad
from adapternet.autodiff import Tensor
from adapternet.models import (AdapterNet, Backbone, BackboneConfig, Pipeline,
                               build_adapter, build_backbone,
                               detach_and_export)


# ---------------------------------------------------------------------------
# adapter
# ---------------------------------------------------------------------------

def test_adapter_rejects_k_below_1():
    with pytest.raises(ValueError):
        build_adapter(0)


def test_adapter_rejects_unknown_init():
    with pytest.raises(ValueError):
        AdapterNet(k=2, init="xavier")


def test_adapter_layers_are_1x1_3to3():
    adapter = build_adapter(4)
    assert adapter.k == 4 and len(adapter.layers) == 4
    for w, b in adapter.layers:
        assert w.shape == (1, 1, 3, 3)
        assert b.shape == (3,)


def test_identity_init_forward_is_bit_exact():
    for k in (1, 3, 5, 8):
        adapter = build_adapter(k)
        rng = np.random.default_rng(k)
        x = rng.uniform(0.0, 1.0, size=(2, 8, 8, 3)).astype(np.float32)
        out = adapter.forward(Tensor(x))
        assert np.array_equal(out.data, x), f"k={k}"


def test_is_identity_tracks_weight_changes():
    adapter = build_adapter(2)
    assert adapter.is_identity()
    adapter.layers[0][0].data[0, 0, 0, 1] = 0.25
    assert not adapter.is_identity()


def test_random_init_is_not_identity():
    adapter = build_adapter(3, init="random", seed=1)
    assert not adapter.is_identity()
    x = np.random.default_rng(0).uniform(0, 1, (1, 4, 4, 3)).astype(np.float32)
    assert not np.array_equal(adapter.forward(Tensor(x)).data, x)


def test_adapter_named_parameters_order():
    names = [n for n, _ in build_adapter(2).named_parameters()]
    assert names == ["adapter0.w", "adapter0.b", "adapter1.w", "adapter1.b"]


def test_adapter_gradient_flow_single_step():
    # one step on a nonzero loss must move the adapter, not the backbone
    backbone = build_backbone(BackboneConfig(blocks=((4,), (4,)),
                                             hidden_units=8))
    backbone.freeze_all()
    adapter = build_adapter(2)
    pipe = Pipeline(backbone=backbone, channel_means=np.zeros(3), adapter=adapter)
    before_backbone = backbone.weight_fingerprints()
    before_adapter = [t.data.copy() for t in adapter.parameters()]

    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, (4, 32, 32, 3)).astype(np.float32)
    labels = rng.integers(0, 10, 4)
    from adapternet.optim import Adam
    opt = Adam(adapter.parameters(), learning_rate=1e-2)
    with ad.record():
        loss = ad.softmax_cross_entropy(pipe.forward(x), labels)
    loss.backward()
    opt.step()

    assert backbone.weight_fingerprints() == before_backbone
    assert any(not np.array_equal(t.data, prev)
               for t, prev in zip(adapter.parameters(), before_adapter))


# ---------------------------------------------------------------------------
# backbone
# ---------------------------------------------------------------------------

def test_backbone_has_six_trainable_layers():
    assert len(build_backbone().trainable_layers) == 6


def test_backbone_parameter_count_closed_form():
    # conv stacks (3x3): 3->16->16, 16->32->32, then dense 2048->128->10
    expect = ((3 * 3 * 3 * 16 + 16) + (3 * 3 * 16 * 16 + 16)
              + (3 * 3 * 16 * 32 + 32) + (3 * 3 * 32 * 32 + 32)
              + (8 * 8 * 32 * 128 + 128) + (128 * 10 + 10))
    assert build_backbone().parameter_count() == expect == 280218


def test_backbone_forward_zero_image_finite():
    backbone = build_backbone()
    x = Tensor(np.zeros((1, 32, 32, 3), dtype=np.float32))
    logits = backbone.forward(x)
    assert logits.shape == (1, 10)
    assert np.isfinite(logits.data).all()


def test_backbone_config_validation():
    with pytest.raises(ValueError):
        BackboneConfig(blocks=()).validate()
    with pytest.raises(ValueError):
        BackboneConfig(input_size=30).validate()  # not divisible by pooling
    with pytest.raises(ValueError):
        BackboneConfig(num_classes=1).validate()


def test_same_seed_same_weights():
    a, b = build_backbone(), build_backbone()
    for (_, ta), (_, tb) in zip(a.named_parameters(), b.named_parameters()):
        assert np.array_equal(ta.data, tb.data)


def test_freeze_all_and_set_trainable_last():
    backbone = build_backbone()
    backbone.freeze_all()
    assert backbone.is_fully_frozen()
    backbone.set_trainable_last(2)
    trainable = [layer.name for layer in backbone.trainable_layers
                 if layer.w.requires_grad]
    assert trainable == ["dense_hidden", "dense_head"]
    assert len(backbone.parameters(trainable_only=True)) == 4  # two (w, b) pairs


def test_set_trainable_last_bounds():
    backbone = build_backbone()
    with pytest.raises(ValueError):
        backbone.set_trainable_last(0)
    with pytest.raises(ValueError):
        backbone.set_trainable_last(7)


def test_fingerprints_detect_single_weight_change():
    backbone = build_backbone()
    before = backbone.weight_fingerprints()
    assert set(before) == {f"{n}.{s}" for n in
                           ("conv0_0", "conv0_1", "conv1_0", "conv1_1",
                            "dense_hidden", "dense_head") for s in "wb"}
    backbone.trainable_layers[0].w.data[0, 0, 0, 0] += 1.0
    after = backbone.weight_fingerprints()
    changed = [n for n in before if before[n] != after[n]]
    assert changed == ["conv0_0.w"]


def test_clone_is_independent():
    backbone = build_backbone()
    backbone.channel_means = np.array([0.4, 0.5, 0.6], dtype=np.float32)
    backbone.clean_top1 = 0.91
    other = backbone.clone()
    assert other.weight_fingerprints() == backbone.weight_fingerprints()
    assert other.clean_top1 == 0.91
    other.trainable_layers[0].w.data += 1.0
    assert other.weight_fingerprints() != backbone.weight_fingerprints()


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _pipe(backbone=None, **kw):
    backbone = backbone or build_backbone(BackboneConfig(blocks=((4,), (4,)),
                                                         hidden_units=8))
    kw.setdefault("channel_means", np.array([0.5, 0.5, 0.5]))
    return Pipeline(backbone=backbone, **kw)


def test_pipeline_requires_channel_means():
    with pytest.raises(ValueError):
        Pipeline(backbone=build_backbone())  # untrained: no means anywhere


def test_pipeline_uses_backbone_means_as_fallback():
    backbone = build_backbone()
    backbone.channel_means = np.array([0.1, 0.2, 0.3], dtype=np.float32)
    pipe = Pipeline(backbone=backbone)
    assert np.allclose(pipe.channel_means, [0.1, 0.2, 0.3])


def test_fresh_adapter_changes_no_logits():
    pipe_plain = _pipe()
    pipe_adapted = _pipe(backbone=pipe_plain.backbone, adapter=build_adapter(5))
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, (4, 32, 32, 3)).astype(np.float32)
    a = pipe_plain.forward(x).data
    b = pipe_adapted.forward(x).data
    assert np.array_equal(a, b)


def test_pipeline_zero_means_equals_bare_backbone():
    backbone = build_backbone(BackboneConfig(blocks=((4,), (4,)), hidden_units=8))
    pipe = Pipeline(backbone=backbone, channel_means=np.zeros(3))
    rng = np.random.default_rng(2)
    x = rng.uniform(0, 1, (2, 32, 32, 3)).astype(np.float32)
    assert np.allclose(pipe.forward(x).data,
                       backbone.forward(Tensor(x)).data, atol=1e-6)


def test_pipeline_accepts_uint8_and_scales():
    pipe = _pipe()
    img = np.full((1, 32, 32, 3), 255, dtype=np.uint8)
    a = pipe.forward(img).data
    b = pipe.forward(np.ones((1, 32, 32, 3), dtype=np.float32)).data
    assert np.allclose(a, b, atol=1e-6)


def test_pipeline_rejects_out_of_range_input():
    pipe = _pipe()
    with pytest.raises(ValueError):
        pipe.forward(np.full((1, 32, 32, 3), 1.5, dtype=np.float32))
    with pytest.raises(ValueError):
        pipe.forward(np.full((1, 32, 32, 3), -0.5, dtype=np.float32))


def test_batch_of_two_equals_two_singles():
    pipe = _pipe()
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 1, (2, 32, 32, 3)).astype(np.float32)
    both = pipe.forward(x).data
    one = pipe.forward(x[:1]).data
    two = pipe.forward(x[1:]).data
    assert np.allclose(both, np.concatenate([one, two]), atol=1e-6)


# ---------------------------------------------------------------------------
# detach and export
# ---------------------------------------------------------------------------

def test_export_fresh_adapter_round_trips_u8():
    rng = np.random.default_rng(4)
    imgs = rng.integers(0, 256, size=(3, 8, 8, 3), dtype=np.uint8)
    out = detach_and_export(build_adapter(5), imgs)
    assert np.array_equal(out, imgs)


def test_export_clamps_to_valid_u8():
    adapter = build_adapter(1)
    adapter.layers[0][0].data *= 5.0  # push outputs far out of range
    adapter.layers[0][1].data[:] = -0.5
    rng = np.random.default_rng(5)
    imgs = rng.integers(0, 256, size=(2, 8, 8, 3), dtype=np.uint8)
    out = detach_and_export(adapter, imgs)
    assert out.dtype == np.uint8
    assert out.shape == imgs.shape


def test_export_accepts_single_image():
    img = np.zeros((8, 8, 3), dtype=np.uint8)
    out = detach_and_export(build_adapter(2), img)
    assert out.shape == (8, 8, 3)
