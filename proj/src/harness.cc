#include "spectral.h"
