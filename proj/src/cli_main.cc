#include "spectral.h"
int main(){return 0;}
