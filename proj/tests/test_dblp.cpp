#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "pubforge/corpus.hpp"
#include "pubforge/dblp.hpp"

using namespace pubforge;

namespace {
ParseResult parse_xml(const std::string& text, const EntityTable* entities = nullptr) {
  std::istringstream in(text);
  return parse_dblp_xml(in, {}, entities);
}
}  // namespace

TEST(DblpXml, TwoArticlesThreeAuthorships) {
  auto r = parse_xml(R"(<?xml version="1.0"?>
<dblp>
<article key="journals/x/A1"><author>Ann</author><author>Bob</author><year>1999</year><journal>X</journal></article>
<inproceedings key="conf/y/B1"><author>Cid</author><year>2001</year><booktitle>Y</booktitle></inproceedings>
</dblp>)");
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0], (PublicationRecord{"Ann", 1999, "X", "journals/x/A1"}));
  EXPECT_EQ(r.records[1].author_id, "Bob");
  EXPECT_EQ(r.records[2], (PublicationRecord{"Cid", 2001, "Y", "conf/y/B1"}));
}

TEST(DblpXml, MissingYearSkipped) {
  auto r = parse_xml(R"(<dblp><article key="k"><author>Ann</author><journal>X</journal></article></dblp>)");
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.stats.skipped_incomplete, 1u);
}

TEST(DblpXml, RootOnly) {
  EXPECT_TRUE(parse_xml("<dblp></dblp>").records.empty());
  EXPECT_TRUE(parse_xml("<dblp/>").records.empty());
}

TEST(DblpXml, NonPublicationRecordsIgnored) {
  auto r = parse_xml(R"(<dblp><www key="homepages/a"><author>Ann</author><title>Home</title></www></dblp>)");
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.stats.ignored_elements, 1u);
}

TEST(DblpXml, PredefinedAndNumericEntities) {
  auto r = parse_xml(
      R"(<dblp><article key="k&amp;1"><author>J&#246;rg &#x4E2D; &lt;x&gt;</author><year>2000</year></article></dblp>)");
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].pub_key, "k&1");
  EXPECT_EQ(r.records[0].author_id, "J\xC3\xB6rg \xE4\xB8\xAD <x>");
}

TEST(DblpXml, UnknownEntityNamed) {
  try {
    parse_xml(R"(<dblp><article key="k"><author>M&uuml;ller</author><year>2000</year></article></dblp>)");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("uuml"), std::string::npos);
  }
}

TEST(DblpXml, EntityTableResolves) {
  std::istringstream table_in("# dtd entities\nuuml=\xC3\xBC\n");
  auto table = EntityTable::load(table_in);
  auto r = parse_xml(R"(<dblp><article key="k"><author>M&uuml;ller</author><year>2000</year></article></dblp>)",
                     &table);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].author_id, "M\xC3\xBCller");
}

TEST(DblpXml, DoctypeCommentsCdata) {
  auto r = parse_xml(R"(<?xml version="1.0" encoding="UTF-8"?>
<!DOCTYPE dblp SYSTEM "dblp.dtd" [ <!ENTITY foo "bar]"> ]>
<!-- header comment -->
<dblp>
<article key="k1" mdate="2020-01-01"><author><![CDATA[A]]]]></author><!-- c --><year>2003</year></article>
</dblp>)");
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].author_id, "A]]");
  EXPECT_EQ(r.records[0].year, 2003);
}

TEST(DblpXml, MalformedReportsOffset) {
  const std::string doc = "<dblp><article key=\"k\"><author>A</title></article></dblp>";
  try {
    parse_xml(doc);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.offset(), 0u);
    EXPECT_LE(e.offset(), doc.size());
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
}

TEST(DblpXml, TruncatedDocument) {
  EXPECT_THROW(parse_xml("<dblp><article key=\"k\"><author>A</author>"), ParseError);
  EXPECT_THROW(parse_xml(""), ParseError);
  EXPECT_THROW(parse_xml("<dblp></dblp><extra/>"), ParseError);
}

TEST(DblpXml, OutOfRangeYearTallied) {
  auto r = parse_xml(R"(<dblp><article key="k"><author>A</author><year>1850</year></article></dblp>)");
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.stats.skipped_out_of_range, 1u);
}

TEST(DblpXml, ReaderSeesNestedMarkupInTitle) {
  std::istringstream in("<dblp><article key=\"k\"><title>On <i>x</i></title></article></dblp>");
  XmlReader reader(in);
  int starts = 0;
  std::size_t max_depth = 0;
  for (auto ev = reader.next(); ev != XmlReader::Event::end_document; ev = reader.next()) {
    if (ev == XmlReader::Event::start_element) {
      ++starts;
      max_depth = std::max(max_depth, reader.depth());
    }
  }
  EXPECT_EQ(starts, 4);
  EXPECT_EQ(max_depth, 4u);
}

TEST(DblpXml, FixtureXmlMatchesCsv) {
  auto xml_in = table::open_input(PUBFORGE_TEST_DATA "/fixture.xml");
  auto csv_in = table::open_input(PUBFORGE_TEST_DATA "/fixture.csv");
  auto from_xml = parse_dblp_xml(xml_in);
  auto from_csv = parse_tabular(csv_in);
  auto a = from_xml.records, b = from_csv.records;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  EXPECT_EQ(from_xml.stats.skipped_incomplete, 1u);
  EXPECT_EQ(from_xml.stats.ignored_elements, 1u);
}

TEST(DblpXml, SmallChunksAcrossBoundaries) {
  // Exceeds the reader's internal buffer so tokens straddle refills.
  std::string doc = "<dblp>";
  for (int k = 0; k < 3000; ++k) {
    doc += "<article key=\"j/" + std::to_string(k) + "\"><author>Au" + std::to_string(k % 7) +
           "</author><year>" + std::to_string(1990 + k % 20) + "</year><journal>J&amp;K</journal></article>\n";
  }
  doc += "</dblp>";
  auto r = parse_xml(doc);
  ASSERT_EQ(r.records.size(), 3000u);
  EXPECT_EQ(r.records[2999].venue_id, "J&K");
}
