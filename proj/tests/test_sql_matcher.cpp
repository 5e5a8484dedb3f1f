#include <doctest.h>

#include <string>
#include <vector>

#include "reflectsql/sql_matcher.hpp"

using namespace reflectsql;

namespace {

InterventionType type_of(const std::string& sql) {
    auto m = classify(sql);
    REQUIRE(m.has_value());
    return intervention_type(*m);
}

}  // namespace

TEST_CASE("normalize collapses whitespace and drops the trailing semicolon") {
    CHECK(normalize("  SELECT 1 ;") == "SELECT 1");
    CHECK(normalize("alter table result\n   modify salary INT") ==
          "alter table result modify salary INT");
    CHECK(normalize("SELECT a -- trailing comment\nFROM t") == "SELECT a FROM t");
    CHECK(normalize("SELECT /* block */ a FROM t;") == "SELECT a FROM t");
    CHECK(normalize("SELECT ' spaced   out ;' FROM t") == "SELECT ' spaced   out ;' FROM t");
    CHECK(normalize("") == "");
    CHECK(normalize(" ;  ") == "");
}

TEST_CASE("normalize is idempotent") {
    const std::vector<std::string> samples = {
        "  SELECT  1  ;",
        "CREATE INDEX title_index ON task2(title)",
        "select 'a;b' /* x */ from t -- done",
        "ALTER TABLE t MODIFY c VARCHAR(20)",
    };
    for (const auto& s : samples) {
        const std::string once = normalize(s);
        CHECK(normalize(once) == once);
    }
}

TEST_CASE("split_statements splits on top-level semicolons only") {
    auto stmts = split_statements("SELECT 1; SELECT ';' ; SELECT 3");
    REQUIRE(stmts.size() == 3);
    CHECK(stmts[0] == "SELECT 1");
    CHECK(stmts[1] == "SELECT ';'");
    CHECK(stmts[2] == "SELECT 3");

    CHECK(split_statements(";;;").empty());
    CHECK(split_statements("SELECT 1").size() == 1);
}

TEST_CASE("classifies the five worked trigger commands") {
    SUBCASE("alter modify") {
        auto m = classify("alter table result modify salary INT");
        REQUIRE(m.has_value());
        auto dm = std::get<DatatypeComparisonMatch>(*m);
        CHECK(dm.table == "result");
        CHECK(dm.column == "salary");
        CHECK(dm.new_datatype == "INT");
    }
    SUBCASE("composite index") {
        auto m = classify("CREATE INDEX idx_1 ON result2 (dept_name, title)");
        REQUIRE(m.has_value());
        auto cm = std::get<CompositeIndexMatch>(*m);
        CHECK(cm.index == "idx_1");
        CHECK(cm.table == "result2");
        CHECK(cm.columns == std::vector<std::string>{"dept_name", "title"});
    }
    SUBCASE("single column index, no space before paren") {
        auto m = classify("CREATE INDEX title_index ON task2(title)");
        REQUIRE(m.has_value());
        auto sm = std::get<SingleColumnIndexMatch>(*m);
        CHECK(sm.index == "title_index");
        CHECK(sm.table == "task2");
        CHECK(sm.column == "title");
    }
    SUBCASE("inner join select") {
        const std::string sql =
            "SELECT e.first_name, e.last_name, s.from_date, s.to_date FROM salaries s "
            "INNER JOIN employees e ON s.emp_no = e.emp_no WHERE s.salary > 100000";
        auto m = classify(sql);
        REQUIRE(m.has_value());
        auto jm = std::get<InnerJoinSelectMatch>(*m);
        CHECK(jm.join_count == 1);
        CHECK(jm.query_text == sql);
        CHECK(jm.tables == std::vector<std::string>{"salaries", "employees"});
    }
    SUBCASE("create table as join") {
        const std::string sql =
            "CREATE TABLE emp_title_dept AS (SELECT e.emp_no, e.first_name, e.last_name, "
            "t.title, d.dept_no FROM employees e INNER JOIN dept_emp_list d ON e.emp_no = "
            "d.emp_no INNER JOIN titles t ON d.emp_no = t.emp_no)";
        auto m = classify(sql);
        REQUIRE(m.has_value());
        auto tm = std::get<CreateTableAsJoinMatch>(*m);
        CHECK(tm.table == "emp_title_dept");
        CHECK(tm.join_count == 2);
        CHECK(tm.query_text.substr(0, 6) == "SELECT");
        CHECK(tm.tables ==
              std::vector<std::string>{"employees", "dept_emp_list", "titles"});
    }
}

TEST_CASE("bare JOIN counts as inner, outer joins do not fire") {
    CHECK(type_of("SELECT a FROM t1 JOIN t2 ON t1.x = t2.x") ==
          InterventionType::DENORMALIZATION_WHEN);
    CHECK(!classify("SELECT a FROM t1 LEFT JOIN t2 ON t1.x = t2.x").has_value());
    CHECK(!classify("SELECT a FROM t1 RIGHT OUTER JOIN t2 ON t1.x = t2.x").has_value());
    CHECK(!classify("SELECT a FROM t1 CROSS JOIN t2").has_value());
    CHECK(type_of("SELECT a FROM t1 LEFT JOIN t2 ON t1.x = t2.x JOIN t3 ON t1.y = t3.y") ==
          InterventionType::DENORMALIZATION_WHEN);
}

TEST_CASE("joins inside subqueries do not make the outer select fire") {
    CHECK(!classify("SELECT a FROM (SELECT x FROM t1 INNER JOIN t2 ON t1.i = t2.i) sub")
               .has_value());
    // ... but a top-level join with a subquery operand does.
    auto m = classify(
        "SELECT b.name, t.avg_stars FROM businesses b INNER JOIN (select business_id, "
        "avg(stars) avg_stars FROM reviews GROUP BY business_id) t ON "
        "b.business_id=t.business_id WHERE avg_stars = 5");
    REQUIRE(m.has_value());
    auto jm = std::get<InnerJoinSelectMatch>(*m);
    CHECK(jm.join_count == 1);
    CHECK(jm.tables == std::vector<std::string>{"businesses", "t"});
}

TEST_CASE("create table as select takes precedence over the select pattern") {
    const std::string ctas =
        "CREATE TABLE t AS SELECT a FROM t1 INNER JOIN t2 ON t1.x = t2.x";
    auto all = classify_all(ctas);
    REQUIRE(all.size() == 1);
    CHECK(std::holds_alternative<CreateTableAsJoinMatch>(all[0]));
}

TEST_CASE("create table forms") {
    SUBCASE("AS SELECT without parens") {
        auto m = classify("CREATE TABLE t AS SELECT a FROM x JOIN y ON x.i = y.i");
        REQUIRE(m.has_value());
        CHECK(std::get<CreateTableAsJoinMatch>(*m).join_count == 1);
    }
    SUBCASE("bare (SELECT ...) form") {
        auto m = classify(
            "CREATE TABLE task2 (SELECT e.*, d.dept_no, d.dept_name, t.title, t.from_date, "
            "t.to_date FROM employees AS e JOIN dept_emp_list AS d ON e.emp_no=d.emp_no JOIN "
            "titles AS t ON t.emp_no=d.emp_no)");
        REQUIRE(m.has_value());
        auto tm = std::get<CreateTableAsJoinMatch>(*m);
        CHECK(tm.table == "task2");
        CHECK(tm.join_count == 2);
    }
    SUBCASE("joinless CTAS does not fire") {
        CHECK(!classify("CREATE TABLE t AS SELECT a, b FROM x WHERE a > 1").has_value());
    }
    SUBCASE("column definition list does not fire") {
        CHECK(!classify("CREATE TABLE t (a INT, b VARCHAR(10))").has_value());
    }
}

TEST_CASE("multi-clause alter yields one match per MODIFY") {
    auto all = classify_all(
        "ALTER TABLE t MODIFY a INT, ADD COLUMN z TEXT, MODIFY b VARCHAR(20) NOT NULL");
    REQUIRE(all.size() == 2);
    auto m0 = std::get<DatatypeComparisonMatch>(all[0]);
    auto m1 = std::get<DatatypeComparisonMatch>(all[1]);
    CHECK(m0.column == "a");
    CHECK(m0.new_datatype == "INT");
    CHECK(m1.column == "b");
    CHECK(m1.new_datatype == "VARCHAR(20)");
    CHECK(classify("ALTER TABLE t MODIFY a INT")->index() == 0);
}

TEST_CASE("alter modify datatype captures arguments and modifiers") {
    auto m = classify("ALTER TABLE t MODIFY COLUMN price DECIMAL(8, 2) UNSIGNED NOT NULL");
    REQUIRE(m.has_value());
    CHECK(std::get<DatatypeComparisonMatch>(*m).new_datatype == "DECIMAL(8, 2) UNSIGNED");
}

TEST_CASE("index matches partition on column count") {
    for (int n = 1; n <= 6; ++n) {
        std::string cols;
        for (int i = 0; i < n; ++i) {
            if (i) cols += ", ";
            cols += "c" + std::to_string(i);
        }
        auto m = classify("CREATE INDEX i ON t (" + cols + ")");
        REQUIRE(m.has_value());
        if (n == 1)
            CHECK(std::holds_alternative<SingleColumnIndexMatch>(*m));
        else
            CHECK(std::get<CompositeIndexMatch>(*m).columns.size() ==
                  static_cast<std::size_t>(n));
    }
}

TEST_CASE("degenerate index statements do not fire") {
    CHECK(!classify("CREATE INDEX i ON t ()").has_value());
    CHECK(!classify("CREATE INDEX i ON t (a, a)").has_value());
    CHECK(!classify("CREATE INDEX i ON t (a, A)").has_value());
    CHECK(!classify("CREATE INDEX i ON t (a,)").has_value());
    CHECK(!classify("CREATE INDEX i ON t").has_value());
}

TEST_CASE("index options are tolerated") {
    auto m = classify("CREATE UNIQUE INDEX i ON t (a(10) DESC, b ASC)");
    REQUIRE(m.has_value());
    CHECK(std::get<CompositeIndexMatch>(*m).columns == std::vector<std::string>{"a", "b"});
}

TEST_CASE("backticked identifiers compare unquoted") {
    auto m = classify("CREATE INDEX `idx` ON `my table` (`col a`, colb)");
    REQUIRE(m.has_value());
    auto cm = std::get<CompositeIndexMatch>(*m);
    CHECK(cm.table == "my table");
    CHECK(cm.columns == std::vector<std::string>{"col a", "colb"});
}

TEST_CASE("non-trigger statements never classify") {
    const std::vector<std::string> negatives = {
        "SELECT * FROM employees",
        "SELECT salary FROM salaries WHERE salary > 100000",
        "INSERT INTO t VALUES (1, 2)",
        "UPDATE t SET a = 1 WHERE b = 2",
        "DELETE FROM t WHERE a = 1",
        "DROP TABLE result2",
        "DROP INDEX idx_1 ON result2",
        "ALTER TABLE t ADD COLUMN c INT",
        "ALTER TABLE t ADD INDEX idx (c)",
        "ALTER TABLE t DROP COLUMN c",
        "ALTER TABLE t RENAME TO t2",
        "CREATE TABLE t (a INT PRIMARY KEY, b VARCHAR(5))",
        "CREATE VIEW v AS SELECT a FROM t1 INNER JOIN t2 ON t1.x = t2.x",
        "SHOW TABLES",
        "DESCRIBE employees",
        "EXPLAIN SELECT a FROM t1 INNER JOIN t2 ON t1.x = t2.x",
        "USE employees_db",
        "SET @x = 1",
        "TRUNCATE TABLE t",
    };
    for (const auto& sql : negatives) {
        CAPTURE(sql);
        CHECK(!classify(normalize(sql)).has_value());
        CHECK(classify_all(normalize(sql)).empty());
    }
}

TEST_CASE("summarize_ddl extracts registry facts") {
    SUBCASE("explicit column definitions") {
        auto ddl = summarize_ddl(
            "CREATE TABLE plain_t (salary VARCHAR(20), name VARCHAR(40), PRIMARY KEY (name))");
        CHECK(ddl.created_table == "plain_t");
        CHECK(!ddl.create_as_select);
        REQUIRE(ddl.created_columns.size() == 2);
        CHECK(ddl.created_columns[0].name == "salary");
        CHECK(ddl.created_columns[0].datatype == "VARCHAR(20)");
        CHECK(ddl.created_columns[1].name == "name");
        CHECK(ddl.created_columns[1].datatype == "VARCHAR(40)");
    }
    SUBCASE("select-defined tables expose no column types") {
        auto ddl = summarize_ddl("CREATE TABLE t AS SELECT a, b FROM x");
        CHECK(ddl.created_table == "t");
        CHECK(ddl.create_as_select);
        CHECK(ddl.created_columns.empty());
    }
    SUBCASE("alter add column") {
        auto ddl = summarize_ddl("ALTER TABLE t ADD COLUMN c DECIMAL(6,2), ADD INDEX i (c)");
        CHECK(ddl.altered_table == "t");
        REQUIRE(ddl.added_columns.size() == 1);
        CHECK(ddl.added_columns[0].name == "c");
        CHECK(ddl.added_columns[0].datatype == "DECIMAL(6,2)");
    }
    SUBCASE("drop table") {
        auto ddl = summarize_ddl("DROP TABLE IF EXISTS a, b");
        CHECK(ddl.dropped_tables == std::vector<std::string>{"a", "b"});
    }
}

TEST_CASE("select_list_columns names output columns") {
    CHECK(select_list_columns("SELECT a, t.b, c AS renamed FROM t") ==
          std::vector<std::string>{"a", "b", "renamed"});
    CHECK(select_list_columns("SELECT e.*, d.dept_no FROM e JOIN d ON e.i = d.i") ==
          std::vector<std::string>{"dept_no"});
    CHECK(select_list_columns("SELECT avg(stars) avg_stars FROM reviews") ==
          std::vector<std::string>{"avg_stars"});
    CHECK(select_list_columns("SELECT count(*) FROM t").empty());
}

TEST_CASE("intervention type names round-trip") {
    for (int i = 0; i < kInterventionTypeCount; ++i) {
        const auto t = static_cast<InterventionType>(i);
        auto back = intervention_type_from_string(to_string(t));
        REQUIRE(back.has_value());
        CHECK(*back == t);
    }
    CHECK(!intervention_type_from_string("NOT_A_TYPE").has_value());
}
