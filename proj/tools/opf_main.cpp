#include <cstdio>

int main() {
    std::puts("opf: subcommands arrive with the pipeline modules");
    return 0;
}
