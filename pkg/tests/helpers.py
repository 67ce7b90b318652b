"""Shared model builders for the test suite."""

from __future__ import annotations

from wavefront.evolve import ModelSpec
from wavefront.kernels import Kernel
from wavefront.nonlinearity import ShiftProfile, heterogeneous_logistic, shifted_logistic


def model_a(r=None, *, mu=1.0, d=1.0, tau=0.0, c=0.0, kernel=None) -> ModelSpec:
    prof = r if r is not None else ShiftProfile.smoothstep(-0.5, 1.0)
    return ModelSpec("A", d, mu=mu, tau=tau, c_shift=c, kernel=kernel, f=shifted_logistic(prof, mu))


def model_b(r=None, *, mu=1.0, d=1.0, tau=0.0, c=0.0, alpha=1.0) -> ModelSpec:
    prof = r if r is not None else ShiftProfile.smoothstep(-0.5, 1.0)
    return ModelSpec("B", d, mu=mu, tau=tau, c_shift=c, kernel=Kernel.gaussian(alpha), f=shifted_logistic(prof, mu))


def model_c(*, mu=1.0, d=1.0, tau=0.0) -> ModelSpec:
    return ModelSpec("C", d, mu=mu, tau=tau, f=shifted_logistic(ShiftProfile.constant(1.0), mu))


def model_d(r=None, *, d=1.0) -> ModelSpec:
    prof = r if r is not None else ShiftProfile.constant(1.0)
    return ModelSpec("D", d, h=heterogeneous_logistic(prof))
