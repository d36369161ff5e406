class Apply {
    Runnable r = () -> System.out.println("go");
    Function<Integer, Integer> f = Apply::id;
    static Integer id(Integer x) { return x; }
}
