import io

import numpy as np
import pytest
import torch
from PIL import Image

from junctiongen.colors import ColorOneHot
from junctiongen.dataset import SEGMAP_CLASS_IDS
from junctiongen.errors import TrainingError
from junctiongen.pipeline import (
    GeneratorBundle,
    count_parameters,
    encode_png,
    generate_image,
    model_summary,
    scene_segmap,
    to_uint8_image,
)
from junctiongen.scenegraph import BBox, EntityClass, SceneEntity, encode_time
from junctiongen.training import init_train_state, save_checkpoint


@pytest.fixture(scope="module")
def bundle(toy_cfg):
    return GeneratorBundle.fresh(toy_cfg, seed=0)


class TestToUint8:
    def test_range_mapping(self):
        t = torch.tensor([[[-1.0]], [[0.0]], [[1.0]]])
        img = to_uint8_image(t)
        assert img.shape == (1, 1, 3)
        assert list(img[0, 0]) == [0, 128, 255]

    def test_clips_overflow(self):
        t = torch.full((3, 2, 2), 2.0)
        assert to_uint8_image(t).max() == 255


class TestEncodePng:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        data = encode_png(img)
        back = np.asarray(Image.open(io.BytesIO(data)))
        assert np.array_equal(back, img)

    def test_deterministic_bytes(self):
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        assert encode_png(img) == encode_png(img)


class TestSceneSegmap:
    def test_list_order_paints_later_on_top(self):
        entities = [
            SceneEntity(EntityClass.CAR, BBox(0.5, 0.5, 0.5, 0.5), ColorOneHot(0)),
            SceneEntity(EntityClass.PERSON, BBox(0.5, 0.5, 0.2, 0.2), ColorOneHot(1)),
        ]
        seg = scene_segmap(entities, 32, 32)
        assert seg.labels[16, 16] == SEGMAP_CLASS_IDS[EntityClass.PERSON]
        assert seg.labels[10, 10] == SEGMAP_CLASS_IDS[EntityClass.CAR]


class TestGeneratorBundle:
    def test_fresh_is_eval_mode(self, bundle):
        assert not bundle.generator.training
        assert not bundle.condition.training
        assert bundle.checkpoint_step is None

    def test_from_checkpoint_matches_saved_models(self, toy_cfg, tmp_path):
        state = init_train_state(toy_cfg)
        save_checkpoint(state, tmp_path / "c.pt")
        loaded = GeneratorBundle.from_checkpoint(tmp_path / "c.pt")
        assert loaded.checkpoint_step == 0
        for a, b in zip(state.generator.parameters(), loaded.generator.parameters()):
            assert torch.equal(a, b)

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(TrainingError):
            GeneratorBundle.from_checkpoint(tmp_path / "nope.pt")


class TestGenerateImage:
    def entities(self):
        return [SceneEntity(EntityClass.CAR, BBox(0.5, 0.5, 0.2, 0.2), ColorOneHot(2))]

    def test_shape_and_dtype(self, bundle, toy_cfg):
        img = generate_image(bundle, self.entities(), encode_time(0), seed=1)
        assert img.shape == (*toy_cfg.image_hw, 3)
        assert img.dtype == np.uint8

    def test_seed_reproducible(self, bundle):
        a = generate_image(bundle, self.entities(), encode_time(0), seed=5)
        b = generate_image(bundle, self.entities(), encode_time(0), seed=5)
        assert np.array_equal(a, b)

    def test_seed_changes_image(self, bundle):
        a = generate_image(bundle, self.entities(), encode_time(0), seed=0)
        b = generate_image(bundle, self.entities(), encode_time(0), seed=1)
        assert not np.array_equal(a, b)

    def test_default_seed_is_zero(self, bundle):
        a = generate_image(bundle, self.entities(), encode_time(0))
        b = generate_image(bundle, self.entities(), encode_time(0), seed=0)
        assert np.array_equal(a, b)

    def test_empty_scene_supported(self, bundle):
        img = generate_image(bundle, [], encode_time(43200), seed=0)
        assert img.shape[2] == 3


class TestModelSummary:
    def test_parameter_accounting(self, bundle):
        info = model_summary(bundle)
        assert info["total_parameters"] == (
            info["condition_model_parameters"] + info["generator_parameters"]
        )
        assert info["overhead_over_baseline"] == pytest.approx(
            (info["total_parameters"] - info["baseline_generator_parameters"])
            / info["baseline_generator_parameters"]
        )
        assert info["image_size"] == [64, 64]
        assert info["condition_volume_size"] == [64, 64]

    def test_count_parameters(self):
        lin = torch.nn.Linear(3, 2)
        assert count_parameters(lin) == 3 * 2 + 2
