"""Čech models of a family: complexes, Gauss-Manin, Kodaira-Spencer classes."""

from .builtins import BUILTINS, abelian_model, annulus_ksform, annulus_model, point_model
from .model import CechModel, Family, KSForm, validate_model
