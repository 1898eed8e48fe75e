#define DOCTEST_CONFIG_IMPLEMENT
#include <filesystem>

#include "doctest.h"
#include "test_helpers.hpp"

int main(int argc, char** argv) {
    const int rc = doctest::Context(argc, argv).run();
    std::error_code ec;
    std::filesystem::remove_all(th::tmp_root(), ec);  // best effort
    return rc;
}
