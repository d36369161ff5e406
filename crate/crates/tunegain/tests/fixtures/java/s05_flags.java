class Flags {
    boolean check(int a, int b) {
        boolean ok = a > 0 && b > 0;
        return ok || a == b ? true : false;
    }
}
