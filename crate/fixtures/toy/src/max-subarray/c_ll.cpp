#include <algorithm>
#include <iostream>

int main() {
    std::ios::sync_with_stdio(false);
    int n;
    std::cin >> n;
    long long best = 0, cur = 0;
    for (int i = 0; i < n; ++i) {
        long long v;
        std::cin >> v;
        cur = (i == 0) ? v : std::max(v, cur + v);
        best = (i == 0) ? cur : std::max(best, cur);
    }
    std::cout << best << "\n";
}
