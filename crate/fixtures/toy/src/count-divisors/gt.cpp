#include <iostream>

int main() {
    long long n;
    std::cin >> n;
    long long count = 0;
    for (long long i = 1; i * i <= n; ++i) {
        if (n % i == 0) count += (i * i == n) ? 1 : 2;
    }
    std::cout << count << "\n";
}
