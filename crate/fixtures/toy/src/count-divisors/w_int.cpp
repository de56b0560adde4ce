#include <iostream>

int main() {
    int n;
    std::cin >> n;
    int count = 0;
    for (int i = 1; (long long)i * i <= n; ++i) {
        if (n % i == 0) count += (i * i == n) ? 1 : 2;
    }
    std::cout << count << "\n";
}
