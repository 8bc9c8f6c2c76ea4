"""Shared surfaces and fields; builtin surfaces are cached by specs.builtin_surface."""

from __future__ import annotations

import pytest

from hypersurface_laplacians.fields import AmbientField, ExtensionStrategy
from hypersurface_laplacians.specs import BUILTIN_FIELDS, builtin_surface


@pytest.fixture(scope="session")
def sphere():
    return builtin_surface("sphere")


@pytest.fixture(scope="session")
def ellipsoid():
    return builtin_surface("ellipsoid:2")


@pytest.fixture(scope="session")
def oval():
    return builtin_surface("oval")


@pytest.fixture(scope="session")
def nsphere3():
    return builtin_surface("nsphere:3")


@pytest.fixture
def azimuthal():
    return AmbientField(BUILTIN_FIELDS["azimuthal"], ExtensionStrategy.homogeneous(1))


@pytest.fixture
def mixed():
    return AmbientField(BUILTIN_FIELDS["mixed"], ExtensionStrategy.homogeneous(1))

