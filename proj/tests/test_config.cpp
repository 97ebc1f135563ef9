#include "fkpp/config.hpp"

#include <gtest/gtest.h>

using namespace fkpp;

TEST(Config, SectionsAndComments) {
    const auto c = Config::parse_string("D = 0.1  # diffusion\n\n[mu]\nkind = bump\nh = 1, -2, 0.5\n[obs]\nx0 = 2/3\n", "t.ini");
    EXPECT_EQ(c.get_double("D", 0.0), 0.1);
    EXPECT_EQ(c.require_string("mu.kind"), "bump");
    EXPECT_EQ(*c.get_list("mu.h"), (std::vector<double>{1.0, -2.0, 0.5}));
    EXPECT_DOUBLE_EQ(c.require_double("obs.x0"), 2.0 / 3.0);
    EXPECT_TRUE(c.has_section("obs"));
    EXPECT_FALSE(c.has_section("bc"));
    EXPECT_EQ(c.line_of("mu.kind"), 4);
}

TEST(Config, ErrorsCarryLineNumbers) {
    try {
        Config::parse_string("a = 1\nb\n", "x.ini");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_STREQ(e.what(), "x.ini:2: expected 'key = value'");
    }
    try {
        Config::parse_string("a = 1\na = 2\n", "x.ini");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("x.ini:2"), std::string::npos);
    }
    const auto c = Config::parse_string("\nD = abc\n[mu]\nh = 1, x\n", "y.ini");
    try {
        c.get_double("D");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("y.ini:2"), std::string::npos);
    }
    EXPECT_THROW(c.get_list("mu.h"), ConfigError);
}

TEST(Config, MissingRequiredFieldIsNamed) {
    const auto c = Config::parse_string("gamma = 1\n", "z.ini");
    try {
        c.require_double("D");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_STREQ(e.what(), "z.ini: missing required field 'D'");
    }
}

TEST(Config, IntegersAndOverrides) {
    auto c = Config::parse_string("n = 960\nf = 2.5\n");
    EXPECT_EQ(c.get_int("n", 0), 960);
    EXPECT_THROW(c.get_int("f"), ConfigError);
    c.set("n", "480");
    EXPECT_EQ(c.get_int("n", 0), 480);
    EXPECT_EQ(c.get_int("missing", 7), 7);
}

TEST(Config, LoadMissingFile) { EXPECT_THROW(Config::load("/nonexistent/cfg.ini"), ConfigError); }
