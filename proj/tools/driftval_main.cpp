#include <cstdio>
int main() { std::puts("driftval"); return 0; }
