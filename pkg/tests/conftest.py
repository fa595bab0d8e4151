import numpy as np
import pytest


class ScriptedRandom:
    """Stand-in for a numpy Generator that replays fixed draws in order."""

    def __init__(self, uniforms=(), normals=()):
        self.uniforms = list(uniforms)
        self.normals = list(normals)

    def random(self):
        return self.uniforms.pop(0)

    def standard_normal(self, size=None):
        if size is None:
            return self.normals.pop(0)
        out = np.array(self.normals[:size], dtype=float)
        del self.normals[:size]
        assert len(out) == size, "ran out of scripted normals"
        return out

    @property
    def exhausted(self):
        return not self.uniforms and not self.normals


@pytest.fixture
def scripted():
    return ScriptedRandom


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
