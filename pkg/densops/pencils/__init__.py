from .pencils import *
