#define DOCTEST_CONFIG_IMPLEMENT
#include <malloc.h>

#include "doctest.h"

int main(int argc, char** argv) {
    // keep large tensor blocks on the heap instead of mmap round trips
    mallopt(M_MMAP_MAX, 0);
    mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
    return doctest::Context(argc, argv).run();
}
