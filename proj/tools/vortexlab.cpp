#include <cstdio>
int main() { std::puts("vortexlab: CLI under construction"); return 0; }
