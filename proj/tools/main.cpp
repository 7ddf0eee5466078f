#include <cstdio>

#include "offdist/offdist.hpp"

int main() {
    std::puts("offdist cli: subcommands pending");
    return 0;
}
