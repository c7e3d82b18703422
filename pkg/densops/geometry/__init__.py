from .connections import *
from .projective import *
