#include <cstdio>

// Integer division by a divisor read at run time; 0 raises SIGFPE.
int main() {
    int a = 0, b = 0;
    if (std::scanf("%d %d", &a, &b) != 2) return 3;
    std::printf("%d\n", a / b);
}
