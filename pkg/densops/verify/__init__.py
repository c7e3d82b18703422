from .generators import *
from .suites import *
from ..utils.integration import IntegrationDomain, IntegrationError, integrate, integrate_torus, \
    integrate_torus_quadrature
