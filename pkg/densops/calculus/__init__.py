from .expression import *
from .densities import *
from .operators import *
