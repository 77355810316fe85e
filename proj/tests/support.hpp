#pragma once

// Small assertion helpers shared across test files.

#include <doctest.h>

#include <string>

// Asserts that fn() throws E and that the message mentions `needle`.
template <typename E, typename Fn>
void check_throws_containing(Fn&& fn, const std::string& needle) {
  try {
    fn();
    FAIL_CHECK("expected an exception mentioning '" << needle << "'");
  } catch (const E& e) {
    const std::string msg = e.what();
    CHECK_MESSAGE(msg.find(needle) != std::string::npos, "message was: " << msg);
  }
}
