#include <cstdio>

int main() {
    std::puts("cvmux: placeholder");
    return 0;
}
